use std::env;
use std::fs;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR is set by cargo");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    fs::create_dir_all(format!("{crate_dir}/include")).expect("could not create include directory");
    cbindgen::generate(&crate_dir)
        .expect("could not generate C header")
        .write_to_file(format!("{crate_dir}/include/archmap.h"));
}
