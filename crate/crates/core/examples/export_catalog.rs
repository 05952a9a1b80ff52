//! Writes every catalog component as a model file into the given directory.

use gbm::io::{save, Model};
use gbm::library::{instantiate, ComponentKind, Options};
use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "models/catalog".into()));
    std::fs::create_dir_all(&dir).expect("create output directory");
    for kind in ComponentKind::ALL {
        let g = instantiate(kind, kind.as_str(), &Options::default()).expect("catalog instantiation");
        let path = dir.join(format!("{kind}.model"));
        save(&Model::Component(g), &path).expect("write model");
        println!("{}", path.display());
    }
}
