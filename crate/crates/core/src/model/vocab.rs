use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabularyError {
    #[error("the included-in relation has a cycle through `{0}`")]
    Cycle(String),
}

/// The `includedIn` hierarchy over action identifiers, child → parent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionVocabulary {
    parents: BTreeMap<String, BTreeSet<String>>,
}

impl ActionVocabulary {
    pub fn new<I, A, B>(edges: I) -> Result<Self, VocabularyError>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let mut parents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (child, parent) in edges {
            let (child, parent) = (child.into(), parent.into());
            if child == parent {
                return Err(VocabularyError::Cycle(child));
            }
            parents.entry(child).or_default().insert(parent);
        }
        let vocab = ActionVocabulary { parents };
        vocab.check_acyclic()?;
        Ok(vocab)
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.parents
            .iter()
            .flat_map(|(c, ps)| ps.iter().map(move |p| (c.as_str(), p.as_str())))
    }

    fn check_acyclic(&self) -> Result<(), VocabularyError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        fn visit<'a>(
            node: &'a str,
            parents: &'a BTreeMap<String, BTreeSet<String>>,
            state: &mut BTreeMap<&'a str, u8>,
        ) -> Result<(), VocabularyError> {
            match state.get(node) {
                Some(1) => return Err(VocabularyError::Cycle(node.to_string())),
                Some(2) => return Ok(()),
                _ => {}
            }
            state.insert(node, 1);
            if let Some(ps) = parents.get(node) {
                for p in ps {
                    visit(p, parents, state)?;
                }
            }
            state.insert(node, 2);
            Ok(())
        }
        for node in self.parents.keys() {
            visit(node, &self.parents, &mut state)?;
        }
        Ok(())
    }

    /// Every action `a′ ≠ a` with `a′` included in `a` transitively.
    pub fn sub_actions(&self, action: &str) -> BTreeSet<String> {
        let mut found = BTreeSet::new();
        let mut frontier = vec![action.to_string()];
        while let Some(current) = frontier.pop() {
            for (child, ps) in &self.parents {
                if ps.contains(&current) && found.insert(child.clone()) {
                    frontier.push(child.clone());
                }
            }
        }
        found.remove(action);
        found
    }

    /// Reflexive-transitive inclusion: `child` includedIn* `ancestor`.
    pub fn included_in(&self, child: &str, ancestor: &str) -> bool {
        child == ancestor || self.sub_actions(ancestor).contains(child)
    }
}
