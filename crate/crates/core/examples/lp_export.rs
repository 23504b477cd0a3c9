//! Writes every master problem of a solve in LP format and reads one back.

use drlp::backend::{parse_lp_text, solve_milp};
use drlp::generate::{capacity_instance, rng, CapacityParams};
use drlp::model::PolicyStructure;
use drlp::reformulation::{solve_affine, AffineOptions};

fn main() -> drlp::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| drlp::Error::Io { path: "tempdir".into(), source: e })?;
    let inst = capacity_instance(&CapacityParams::default(), &mut rng(2));
    let opts = AffineOptions {
        export_lp_dir: Some(dir.path().to_path_buf()),
        ..AffineOptions::default()
    };
    let sol = solve_affine(&inst, &PolicyStructure::identity(inst.n2(), inst.m()), &opts)?;
    let mut files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    let last = files.last().expect("at least one master");
    let text = std::fs::read_to_string(last).unwrap();
    println!("{} masters written; {} starts with:", files.len(), last.display());
    for line in text.lines().take(6) {
        println!("  {}", line.chars().take(96).collect::<String>());
    }
    let spec = parse_lp_text(&text).map_err(|e| drlp::Error::Input(e.to_string()))?;
    let res = solve_milp(&spec, 1e-6)?;
    println!("re-solved last master: {:.6} (solve reported {:.6})", res.objective, sol.objective);
    Ok(())
}
