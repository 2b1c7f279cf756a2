//! SQL for the violation clauses of a policy.
//!
//! The world is a table `world` with one row per event: an `event_id` key
//! and one column per feature, named after the feature in lower case with
//! every character outside `[a-z0-9]` replaced by `_`. Null feature values
//! are SQL nulls. Identifier-set features keep their member count in the
//! main table and their members in `world_members(event_id, feature,
//! member)`, where `feature` is the column name.
//!
//! Every emitted predicate is two-valued: each comparison is guarded by
//! `IS NOT NULL`, so negation and `NOT EXISTS` reproduce the evaluator's
//! treatment of null.
//!
//! Numbers with a finite decimal expansion are written as exact literals;
//! any other rational becomes a division and is compared approximately.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::evaluator::gate;
use crate::matcher::{strip_deadlines, IllFormedRule};
use crate::model::{
    deadlines, ClassSource, Condition, Datatype, EventRule, FeatureSchema, FullPolicy, LitePolicy, Operand, Operator,
    SimpleCondition, Value, World, DATETIME,
};
use crate::model::value::format_number;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("features `{first}` and `{second}` both map to column `{column}`")]
    ColumnCollision { first: String, second: String, column: String },
    #[error(transparent)]
    IllFormedRule(#[from] IllFormedRule),
}

impl EmitError {
    pub fn kind(&self) -> &'static str {
        match self {
            EmitError::ColumnCollision { .. } => "column-collision",
            EmitError::IllFormedRule(_) => "ill-formed-rule",
        }
    }
}

/// Clause queries for one policy.
///
/// `permissions` and `prohibitions` return one row per witness event;
/// `obligations` returns one row per unmet obligation. The full-policy
/// clauses are present only for full policies and return one row per
/// violating event (or, for obligation consequences, per violated pair).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedQuery {
    pub dialect: &'static str,
    pub ddl: String,
    pub permissions: String,
    pub prohibitions: String,
    pub obligations: String,
    pub duties: Option<String>,
    pub duty_consequences: Option<String>,
    pub remedies: Option<String>,
    pub obligation_consequences: Option<String>,
}

impl EmittedQuery {
    /// File name and text for each query, DDL first.
    pub fn files(&self) -> Vec<(&'static str, &str)> {
        let mut out = vec![
            ("schema.sql", self.ddl.as_str()),
            ("permissions.sql", self.permissions.as_str()),
            ("prohibitions.sql", self.prohibitions.as_str()),
            ("obligations.sql", self.obligations.as_str()),
        ];
        let optional = [
            ("permission-duties.sql", &self.duties),
            ("permission-duties-with-consequences.sql", &self.duty_consequences),
            ("prohibition-remedies.sql", &self.remedies),
            ("obligation-consequences.sql", &self.obligation_consequences),
        ];
        out.extend(optional.into_iter().filter_map(|(name, q)| q.as_deref().map(|q| (name, q))));
        out
    }
}

/// Column name for a feature name.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

fn columns(schema: &FeatureSchema) -> Result<Vec<String>, EmitError> {
    let mut seen: BTreeMap<String, String> = BTreeMap::from([("event_id".to_string(), "event_id".to_string())]);
    let mut out = Vec::new();
    for decl in schema.features() {
        let column = sanitize(&decl.name);
        if let Some(first) = seen.insert(column.clone(), decl.name.clone()) {
            return Err(EmitError::ColumnCollision { first, second: decl.name.clone(), column });
        }
        out.push(column);
    }
    Ok(out)
}

fn quote_text(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn literal(v: &Value) -> String {
    match v {
        Value::Null => "NULL".into(),
        Value::Timestamp(t) => t.to_string(),
        Value::Number(n) => {
            let text = format_number(n);
            if text.contains('/') {
                format!("({}.0 / {})", n.numer(), n.denom())
            } else {
                text
            }
        }
        Value::Text(s) | Value::Identifier(s) => quote_text(s),
        Value::IdentifierSet(members) => members.len().to_string(),
    }
}

const FALSE: &str = "(1=0)";
const TRUE: &str = "(1=1)";

struct Emitter<'a> {
    schema: &'a FeatureSchema,
    columns: Vec<String>,
    aliases: usize,
}

impl<'a> Emitter<'a> {
    fn new(schema: &'a FeatureSchema) -> Result<Self, EmitError> {
        Ok(Emitter { schema, columns: columns(schema)?, aliases: 0 })
    }

    fn alias(&mut self, prefix: &str) -> String {
        self.aliases += 1;
        format!("{prefix}{}", self.aliases)
    }

    fn column(&self, table: &str, feature: usize) -> String {
        format!("{table}.\"{}\"", self.columns[feature])
    }

    fn member_exists(&mut self, table: &str, feature: usize, filter: &str) -> String {
        let m = self.alias("m");
        format!(
            "EXISTS (SELECT 1 FROM world_members {m} WHERE {m}.event_id = {table}.event_id AND {m}.feature = {} AND {filter_m})",
            quote_text(&self.columns[feature]),
            filter_m = filter.replace("{m}", &m),
        )
    }

    fn has_member(&mut self, table: &str, feature: usize, member: &str) -> String {
        self.member_exists(table, feature, &format!("{{m}}.member = {}", quote_text(member)))
    }

    fn simple(&mut self, c: &SimpleCondition, table: &str) -> String {
        let i = c.feature();
        let col = self.column(table, i);
        let datatype = self.schema.datatype(i).expect("declared feature");
        let body = if c.op() == Operator::IsA {
            self.is_a(c, table)
        } else if c.op().is_scalar() {
            match c.operand() {
                Operand::Scalar(v) => scalar(&col, datatype, c.op(), v),
                Operand::Set(_) => FALSE.into(),
            }
        } else if datatype == Datatype::IdentifierSet {
            self.set_members(c, table)
        } else {
            single_member(&col, datatype, c.op(), c.operand())
        };
        format!("({col} IS NOT NULL AND {body})")
    }

    fn is_a(&mut self, c: &SimpleCondition, table: &str) -> String {
        let Operand::Scalar(Value::Identifier(class)) = c.operand() else {
            return FALSE.into();
        };
        match self.schema.class_source(c.feature()) {
            None => FALSE.into(),
            Some(ClassSource::Static(classes)) => if classes.contains(class) { TRUE } else { FALSE }.into(),
            Some(ClassSource::Companion(j)) => {
                let j = *j;
                let companion = self.column(table, j);
                format!("{companion} IS NOT NULL AND {}", self.has_member(table, j, class))
            }
        }
    }

    fn set_members(&mut self, c: &SimpleCondition, table: &str) -> String {
        let i = c.feature();
        let constants: Vec<&Value> = c.operand().constants().collect();
        let ids: Vec<&str> = constants
            .iter()
            .filter_map(|v| match v {
                Value::Identifier(id) => Some(id.as_str()),
                _ => None,
            })
            .collect();
        let all_ids = ids.len() == constants.len();
        let list = ids.iter().map(|m| quote_text(m)).collect::<Vec<_>>().join(", ");
        let superset = |this: &mut Self| -> String {
            if !all_ids {
                return FALSE.into();
            }
            if ids.is_empty() {
                return TRUE.into();
            }
            ids.iter().map(|m| this.has_member(table, i, m)).collect::<Vec<_>>().join(" AND ")
        };
        let subset = |this: &mut Self| -> String {
            let outside = if ids.is_empty() { TRUE.to_string() } else { format!("{{m}}.member NOT IN ({list})") };
            format!("NOT {}", this.member_exists(table, i, &outside))
        };
        let any = |this: &mut Self| -> String {
            if ids.is_empty() {
                FALSE.into()
            } else {
                this.member_exists(table, i, &format!("{{m}}.member IN ({list})"))
            }
        };
        match c.op() {
            Operator::HasPart => superset(self),
            Operator::IsPartOf => subset(self),
            Operator::IsAllOf => {
                let a = superset(self);
                let b = subset(self);
                format!("{a} AND {b}")
            }
            Operator::IsAnyOf => any(self),
            Operator::IsNoneOf => format!("NOT {}", any(self)),
            _ => FALSE.into(),
        }
    }

    fn condition(&mut self, c: &Condition, table: &str) -> String {
        match c {
            Condition::Simple(s) => self.simple(s, table),
            Condition::And(cs) if cs.is_empty() => TRUE.into(),
            Condition::Or(cs) if cs.is_empty() => FALSE.into(),
            Condition::And(cs) => {
                let parts: Vec<String> = cs.iter().map(|c| self.condition(c, table)).collect();
                format!("({})", parts.join(" AND "))
            }
            Condition::Or(cs) => {
                let parts: Vec<String> = cs.iter().map(|c| self.condition(c, table)).collect();
                format!("({})", parts.join(" OR "))
            }
            Condition::Not(inner) => format!("(NOT {})", self.condition(inner, table)),
            Condition::Xor(a, b) => {
                let (a, b) = (self.condition(a, table), self.condition(b, table));
                format!("(({a} AND (NOT {b})) OR ((NOT {a}) AND {b}))")
            }
        }
    }

    fn rule(&mut self, rule: &EventRule, table: &str) -> String {
        self.condition(&rule.as_condition(), table)
    }

    /// `EXISTS` an event matching `rule`, optionally with a timestamp bound.
    fn exists(&mut self, rule: &EventRule, time: Option<(&str, String)>) -> String {
        let t = self.alias("e");
        let mut body = self.rule(rule, &t);
        if let Some((op, bound)) = time {
            write!(body, " AND {t}.\"{}\" {op} {bound}", self.columns[DATETIME]).unwrap();
        }
        format!("EXISTS (SELECT 1 FROM world {t} WHERE {body})")
    }

    fn ddl(&self) -> String {
        let mut out = String::from("CREATE TABLE world (\n  event_id INTEGER NOT NULL PRIMARY KEY");
        for (decl, col) in self.schema.features().iter().zip(&self.columns) {
            let ty = match decl.datatype {
                Datatype::Timestamp => "BIGINT",
                Datatype::Numeric => "NUMERIC",
                Datatype::String | Datatype::Identifier => "VARCHAR(1024)",
                Datatype::IdentifierSet => "INTEGER",
            };
            let not_null = if decl.id <= 1 { " NOT NULL" } else { "" };
            write!(out, ",\n  \"{col}\" {ty}{not_null}").unwrap();
        }
        out.push_str("\n);\n");
        out.push_str(
            "CREATE TABLE world_members (\n  event_id INTEGER NOT NULL,\n  feature VARCHAR(1024) NOT NULL,\n  \
             member VARCHAR(1024) NOT NULL,\n  PRIMARY KEY (event_id, feature, member)\n);\n",
        );
        out
    }
}

fn scalar(col: &str, datatype: Datatype, op: Operator, v: &Value) -> String {
    if v.datatype() != Some(datatype) {
        return FALSE.into();
    }
    if datatype == Datatype::Identifier && !matches!(op, Operator::Eq | Operator::Neq) {
        return FALSE.into();
    }
    let sym = match op {
        Operator::Eq => "=",
        Operator::Neq => "<>",
        Operator::Gt => ">",
        Operator::Gteq => ">=",
        Operator::Lt => "<",
        Operator::Lteq => "<=",
        _ => return FALSE.into(),
    };
    format!("{col} {sym} {}", literal(v))
}

/// Set operators on a scalar feature, whose value acts as a singleton.
fn single_member(col: &str, datatype: Datatype, op: Operator, operand: &Operand) -> String {
    let all: Vec<&Value> = operand.constants().collect();
    let same: Vec<&Value> = all.iter().copied().filter(|v| v.datatype() == Some(datatype)).collect();
    let list = same.iter().map(|v| literal(v)).collect::<Vec<_>>().join(", ");
    let within = if same.is_empty() { FALSE.to_string() } else { format!("{col} IN ({list})") };
    // the singleton contains every constant: only possible for one distinct value
    let superset = match all.as_slice() {
        [] => TRUE.to_string(),
        [v] if v.datatype() == Some(datatype) => format!("{col} = {}", literal(v)),
        _ => FALSE.to_string(),
    };
    match op {
        Operator::HasPart => superset,
        Operator::IsPartOf | Operator::IsAnyOf => within,
        Operator::IsAllOf => {
            if all.is_empty() {
                FALSE.into()
            } else {
                superset
            }
        }
        Operator::IsNoneOf => format!("NOT ({within})"),
        _ => FALSE.into(),
    }
}

fn rule_label(rule: &EventRule) -> String {
    quote_text(rule.label().unwrap_or("<unlabelled>"))
}

fn union(parts: Vec<String>, empty: &str) -> String {
    if parts.is_empty() {
        format!("{empty};\n")
    } else {
        format!("{};\n", parts.join("\nUNION ALL\n"))
    }
}

const FLAG_SOURCE: &str = "FROM (SELECT COUNT(*) AS n FROM world) AS one";

fn lite_queries(e: &mut Emitter, p: &LitePolicy) -> (String, String, String) {
    let dt = e.columns[DATETIME].clone();
    let unpermitted: Vec<String> = p.permissions().iter().map(|r| format!("NOT {}", e.rule(r, "w"))).collect();
    let filter = if unpermitted.is_empty() { TRUE.to_string() } else { unpermitted.join("\n  AND ") };
    let permissions = format!("SELECT w.* FROM world w\nWHERE {filter}\nORDER BY w.\"{dt}\", w.event_id;\n");

    let prohibitions = union(
        p.prohibitions()
            .iter()
            .map(|f| format!("SELECT {} AS rule_label, w.event_id FROM world w WHERE {}", rule_label(f), e.rule(f, "w")))
            .collect(),
        &format!("SELECT '' AS rule_label, w.event_id FROM world w WHERE {FALSE}"),
    );

    let obligations = union(
        p.obligations()
            .iter()
            .map(|o| format!("SELECT {} AS rule_label {FLAG_SOURCE} WHERE NOT {}", rule_label(o), e.exists(o, None)))
            .collect(),
        &format!("SELECT '' AS rule_label {FLAG_SOURCE} WHERE {FALSE}"),
    );
    (permissions, prohibitions, obligations)
}

/// Clause queries and DDL for a Lite policy.
pub fn emit_violation_queries(p: &LitePolicy, schema: &FeatureSchema) -> Result<EmittedQuery, EmitError> {
    gate(p.rules(), p.is_normal_form(), schema)?;
    let mut e = Emitter::new(schema)?;
    let (permissions, prohibitions, obligations) = lite_queries(&mut e, p);
    Ok(EmittedQuery {
        dialect: "ansi-sql",
        ddl: e.ddl(),
        permissions,
        prohibitions,
        obligations,
        duties: None,
        duty_consequences: None,
        remedies: None,
        obligation_consequences: None,
    })
}

/// Clause queries for a full policy, including the temporal clauses as
/// correlated subqueries on the timestamp column.
pub fn emit_full_queries(p: &FullPolicy, schema: &FeatureSchema) -> Result<EmittedQuery, EmitError> {
    gate(p.rules(), p.lite().is_normal_form(), schema)?;
    let mut e = Emitter::new(schema)?;
    let (permissions, prohibitions, obligations) = lite_queries(&mut e, p.lite());
    let now = format!("w.\"{}\"", e.columns[DATETIME]);
    let no_events = format!("SELECT '' AS rule_label, w.event_id FROM world w WHERE {FALSE}");

    let mut duties = Vec::new();
    for d in p.duties() {
        let used = e.rule(&d.permission, "w");
        let prior = e.exists(&d.duty, Some(("<=", now.clone())));
        duties.push(format!(
            "SELECT {} AS rule_label, w.event_id FROM world w WHERE {used} AND NOT {prior}",
            rule_label(&d.permission)
        ));
    }

    let mut duty_consequences = Vec::new();
    for d in p.duty_consequences() {
        let used = e.rule(&d.permission, "w");
        let prior = e.exists(&d.duty, Some(("<=", now.clone())));
        let later = e.exists(&d.duty, Some((">=", now.clone())));
        let consequence = e.exists(&d.consequence, Some((">=", now.clone())));
        duty_consequences.push(format!(
            "SELECT {} AS rule_label, w.event_id FROM world w WHERE {used} AND NOT {prior} AND (NOT {later} OR NOT {consequence})",
            rule_label(&d.permission)
        ));
    }

    let mut remedies = Vec::new();
    for r in p.remedies() {
        let done = e.rule(&r.prohibition, "w");
        let remedy = e.exists(&r.remedy, Some((">=", now.clone())));
        remedies.push(format!(
            "SELECT {} AS rule_label, w.event_id FROM world w WHERE {done} AND NOT {remedy}",
            rule_label(&r.prohibition)
        ));
    }

    let mut consequences = Vec::new();
    for oc in p.obligation_consequences() {
        let mut per_deadline = Vec::new();
        for t in deadlines(&oc.obligation) {
            let met = e.exists(&oc.obligation, None);
            let late = e.exists(&strip_deadlines(&oc.obligation), None);
            let consequence = e.exists(&oc.consequence, Some((">=", t.to_string())));
            per_deadline.push(format!("(NOT {met} AND NOT ({late} AND {consequence}))"));
        }
        consequences.push(format!(
            "SELECT {} AS rule_label {FLAG_SOURCE} WHERE {}",
            rule_label(&oc.obligation),
            per_deadline.join(" OR ")
        ));
    }

    Ok(EmittedQuery {
        dialect: "ansi-sql",
        ddl: e.ddl(),
        permissions,
        prohibitions,
        obligations,
        duties: Some(union(duties, &no_events)),
        duty_consequences: Some(union(duty_consequences, &no_events)),
        remedies: Some(union(remedies, &no_events)),
        obligation_consequences: Some(union(consequences, &format!("SELECT '' AS rule_label {FLAG_SOURCE} WHERE {FALSE}"))),
    })
}

/// `INSERT` statements materialising a world. Event ids follow the world's
/// iteration order, starting at 1.
pub fn emit_world_inserts(world: &World, schema: &FeatureSchema) -> Result<String, EmitError> {
    let columns = columns(schema)?;
    let header = columns.iter().map(|c| format!("\"{c}\"")).collect::<Vec<_>>().join(", ");
    let mut out = String::new();
    for (id, event) in world.iter().enumerate() {
        let id = id + 1;
        let values = event.values().iter().map(literal).collect::<Vec<_>>().join(", ");
        writeln!(out, "INSERT INTO world (event_id, {header}) VALUES ({id}, {values});").unwrap();
        for (f, v) in event.values().iter().enumerate() {
            if let Value::IdentifierSet(members) = v {
                for m in members {
                    writeln!(
                        out,
                        "INSERT INTO world_members (event_id, feature, member) VALUES ({id}, {}, {});",
                        quote_text(&columns[f]),
                        quote_text(m)
                    )
                    .unwrap();
                }
            }
        }
    }
    Ok(out)
}
