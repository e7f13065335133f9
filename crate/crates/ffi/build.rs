use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let header = crate_dir.join("include").join("prior_stability.h");
    let bindings = cbindgen::generate(&crate_dir).expect("cbindgen generates the C header");
    // Only touch the file when its contents change so downstream builds stay cached.
    let mut rendered = Vec::new();
    bindings.write(&mut rendered);
    if std::fs::read(&header).ok().as_deref() != Some(rendered.as_slice()) {
        std::fs::create_dir_all(header.parent().unwrap()).unwrap();
        std::fs::write(&header, rendered).unwrap();
    }
}
