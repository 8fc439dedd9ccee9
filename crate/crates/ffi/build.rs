use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    // write_to_file leaves the committed header untouched when it is current.
    cbindgen::generate(&crate_dir)
        .expect("cbindgen generation")
        .write_to_file(crate_dir.join("include/meson_bell.h"));
}
