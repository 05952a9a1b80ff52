use super::IoError;
use crate::analysis::DesignProblem;
use crate::compose::{combine, input_common, ConnectionSpec};
use crate::expr::Expr;
use crate::graph::Graph;
use crate::library::{instantiate_named, Options};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// A catalog instance or a component stored in another model file. Exactly
/// one of `kind` and `file` is set; relative paths resolve against the
/// directory of the system file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "is_default_options")]
    pub options: Options,
}

fn is_default_options(o: &Options) -> bool {
    *o == Options::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputRule {
    pub input: String,
    pub expr: Expr,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDefinition {
    pub name: String,
    pub components: Vec<ComponentRef>,
    #[serde(default)]
    pub connections: Vec<ConnectionSpec>,
    #[serde(default)]
    pub input_common: Vec<InputRule>,
    /// Disturbance values by channel name in the combined graph.
    #[serde(default)]
    pub boundary_conditions: BTreeMap<String, f64>,
    /// Initial conditions for every internal state of the combined graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_condition: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Component(Graph),
    System(SystemDefinition),
    Problem(Box<DesignProblem>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    component: Option<Graph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    system: Option<SystemDefinition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    problem: Option<DesignProblem>,
}

fn parse(text: &str, origin: &str) -> Result<Model, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| IoError::Schema {
        origin: origin.to_string(),
        location: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(IoError::Version { origin: origin.to_string(), found: file.schema_version });
    }
    let model = match (file.component, file.system, file.problem) {
        (Some(g), None, None) => Model::Component(g),
        (None, Some(s), None) => Model::System(s),
        (None, None, Some(p)) => Model::Problem(Box::new(p)),
        _ => {
            return Err(IoError::Schema {
                origin: origin.to_string(),
                location: ".".into(),
                message: "expected exactly one of `component`, `system` or `problem`".into(),
            })
        }
    };
    let check = |g: &Graph, what: &str| {
        let report = g.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(IoError::Invalid(format!("{origin}: {what} '{}' is invalid:\n{report}", g.name)))
        }
    };
    match &model {
        Model::Component(g) => check(g, "component")?,
        Model::Problem(p) => check(&p.model, "problem model")?,
        Model::System(_) => {}
    }
    Ok(model)
}

/// Parses a model document held in memory.
pub fn from_str(text: &str) -> Result<Model, IoError> {
    parse(text, "<string>")
}

pub fn to_string(model: &Model) -> String {
    let mut file = ModelFile { schema_version: SCHEMA_VERSION, component: None, system: None, problem: None };
    match model {
        Model::Component(g) => file.component = Some(g.clone()),
        Model::System(s) => file.system = Some(s.clone()),
        Model::Problem(p) => file.problem = Some((**p).clone()),
    }
    let mut s = serde_json::to_string_pretty(&file).expect("model documents always serialize");
    s.push('\n');
    s
}

pub fn load(path: &Path) -> Result<Model, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::Io { path: path.to_path_buf(), reason: e.to_string() })?;
    parse(&text, &path.display().to_string())
}

pub fn save(model: &Model, path: &Path) -> Result<(), IoError> {
    fs::write(path, to_string(model)).map_err(|e| IoError::Io { path: path.to_path_buf(), reason: e.to_string() })
}

/// Loads a model and resolves it to a single graph. System definitions are
/// built relative to the file's directory.
pub fn load_graph(path: &Path) -> Result<Graph, IoError> {
    match load(path)? {
        Model::Component(g) => Ok(g),
        Model::System(def) => build_system(&def, path.parent().unwrap_or(Path::new("."))),
        Model::Problem(p) => Ok(p.model),
    }
}

/// Instantiates, combines and finishes a system definition.
pub fn build_system(def: &SystemDefinition, base: &Path) -> Result<Graph, IoError> {
    let mut parts = Vec::with_capacity(def.components.len());
    for c in &def.components {
        let g = match (&c.kind, &c.file) {
            (Some(kind), None) => instantiate_named(kind, &c.name, &c.options)?,
            (None, Some(file)) => {
                if c.options != Options::default() {
                    return Err(IoError::Invalid(format!("component '{}': options apply to catalog kinds only", c.name)));
                }
                let path = base.join(file);
                match load(&path)? {
                    Model::Component(mut g) => {
                        g.name = c.name.clone();
                        g
                    }
                    _ => return Err(IoError::Invalid(format!("{} does not hold a component", path.display()))),
                }
            }
            _ => return Err(IoError::Invalid(format!("component '{}' needs exactly one of `kind` and `file`", c.name))),
        };
        parts.push(g);
    }
    let mut g = combine(&def.name, &parts, &def.connections)?;
    if !def.input_common.is_empty() {
        let rules: Vec<(String, Expr)> = def.input_common.iter().map(|r| (r.input.clone(), r.expr.clone())).collect();
        g = input_common(&g, &rules)?;
    }
    let names: Vec<String> = g.disturbances().into_iter().map(|d| d.name).collect();
    for (name, value) in &def.boundary_conditions {
        if !names.contains(name) {
            return Err(IoError::Invalid(format!(
                "boundary condition '{name}' matches no disturbance channel (available: {})",
                names.join(", ")
            )));
        }
        g.disturbance_defaults.insert(name.clone(), *value);
    }
    if let Some(ic) = &def.initial_condition {
        g.set_initial_conditions(ic).map_err(|e| IoError::Invalid(e.to_string()))?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{instantiate, ComponentKind};

    #[test]
    fn component_round_trip() {
        let g = instantiate(ComponentKind::Tank, "mainTank", &Options::default()).unwrap();
        let text = to_string(&Model::Component(g.clone()));
        assert_eq!(from_str(&text).unwrap(), Model::Component(g));
    }

    #[test]
    fn bad_endpoint_names_the_edge() {
        let mut g = instantiate(ComponentKind::Tank, "mainTank", &Options::default()).unwrap();
        g.edge_matrix[0][1] = 9;
        let err = from_str(&to_string(&Model::Component(g.clone()))).unwrap_err().to_string();
        assert!(err.contains(&g.edges[0].name) && err.contains("vertex 9"), "{err}");
    }

    #[test]
    fn unknown_field_reports_location() {
        let text = r#"{"schema_version": 1, "system": {"name": "s", "components": [{"name": "a", "kind": "tank", "colour": 1}]}}"#;
        match from_str(text) {
            Err(IoError::Schema { location, .. }) => assert_eq!(location, "system.components[0].colour"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = r#"{"schema_version": 2, "system": {"name": "s", "components": []}}"#;
        assert!(matches!(from_str(text), Err(IoError::Version { found: 2, .. })));
    }

    #[test]
    fn system_definition_matches_programmatic_combine() {
        let def = SystemDefinition {
            name: "sys".into(),
            components: vec![
                ComponentRef { name: "mainTank".into(), kind: Some("tank".into()), file: None, options: Options::default() },
                ComponentRef { name: "heatLoad".into(), kind: Some("heat_load".into()), file: None, options: Options::default() },
            ],
            connections: vec![ConnectionSpec::new((0, 2), (1, 1))],
            ..Default::default()
        };
        let text = to_string(&Model::System(def));
        let Model::System(def) = from_str(&text).unwrap() else { panic!() };
        let built = build_system(&def, Path::new(".")).unwrap();
        let parts = [
            instantiate(ComponentKind::Tank, "mainTank", &Options::default()).unwrap(),
            instantiate(ComponentKind::HeatLoad, "heatLoad", &Options::default()).unwrap(),
        ];
        assert_eq!(built, combine("sys", &parts, &[ConnectionSpec::new((0, 2), (1, 1))]).unwrap());
    }

    #[test]
    fn unknown_boundary_condition_is_an_error() {
        let def = SystemDefinition {
            name: "sys".into(),
            components: vec![ComponentRef { name: "t".into(), kind: Some("tank".into()), file: None, options: Options::default() }],
            boundary_conditions: BTreeMap::from([("nope".into(), 1.0)]),
            ..Default::default()
        };
        assert!(build_system(&def, Path::new(".")).is_err());
    }
}
