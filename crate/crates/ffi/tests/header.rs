use std::process::Command;

#[test]
fn header_compiles_as_c_and_cpp() {
    let inc = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"sqe.h\"\nint main(void) { SqeSimConfig c = sqe_sim_config_default(); return c.n == 2 && SQE_STATUS_OK == 0 ? 0 : 1; }\n",
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I", inc])
            .arg(&src)
            .status()
            .expect("C compiler");
        assert!(status.success(), "{compiler} rejected sqe.h");
    }
}
