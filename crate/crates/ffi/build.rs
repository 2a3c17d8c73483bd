use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    cbindgen::Builder::new()
        .with_crate(&dir)
        .with_language(cbindgen::Language::C)
        .with_include_guard("STEKLOV_H")
        .with_header("/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */")
        .with_documentation(true)
        .with_cpp_compat(true)
        .generate()
        .expect("cbindgen failed on crates/ffi/src/lib.rs")
        .write_to_file(dir.join("include/steklov.h"));
}
