use std::process::Command;

fn main() {
    println!("cargo:rerun-if-env-changed=FELAB_GIT_REV");
    println!("cargo:rerun-if-changed=../../.git/HEAD");
    println!("cargo:rerun-if-changed=../../.git/index");
    if std::env::var_os("FELAB_GIT_REV").is_some() {
        return;
    }
    let rev = Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok());
    if let Some(rev) = rev {
        println!("cargo:rustc-env=FELAB_GIT_REV={}", rev.trim());
    }
}
