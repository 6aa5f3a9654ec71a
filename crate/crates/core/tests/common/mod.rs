#![allow(dead_code)]

use std::path::PathBuf;

use algebroid_engine::expr::Expr;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

/// Smooth random expression over `x1..xm`, `y1..yr`, defined everywhere.
pub fn random_expr_src(rng: &mut ChaCha8Rng, depth: u32, m: usize, r: usize) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..3) {
            0 => {
                let c: f64 = rng.gen_range(-2.0..2.0);
                if c < 0.0 {
                    format!("neg({:.3})", -c)
                } else {
                    format!("{c:.3}")
                }
            }
            1 => format!("x{}", rng.gen_range(1..=m)),
            _ => format!("y{}", rng.gen_range(1..=r)),
        };
    }
    let mut sub = || random_expr_src(rng, depth - 1, m, r);
    let (a, b) = (sub(), sub());
    match rng.gen_range(0..8) {
        0 => format!("({a} + {b})"),
        1 => format!("({a} - {b})"),
        2 | 3 => format!("({a} * {b})"),
        4 => format!("({a}) / (1 + ({b})^2)"),
        5 => format!("sin({a})"),
        6 => format!("cos({a}) * {b}"),
        _ => format!("({a})^{}", rng.gen_range(2..=3)),
    }
}

pub fn random_expr(seed: u64, m: usize, r: usize) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Expr::parse(&random_expr_src(&mut rng, 4, m, r), m, r).expect("generated expression parses")
}

/// Worst relative error between symbolic first derivatives and central
/// differences with step `h`, over every variable.
pub fn fd_relative_error(e: &Expr, x: &[f64], y: &[f64], h: f64) -> f64 {
    let mut worst = 0.0f64;
    let f = |x: &[f64], y: &[f64]| e.eval(x, y).unwrap();
    for i in 0..x.len() {
        let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
        xp[i] += h;
        xm[i] -= h;
        let fd = (f(&xp, y) - f(&xm, y)) / (2.0 * h);
        let sym = e.dx(i).eval(x, y).unwrap();
        worst = worst.max((fd - sym).abs() / sym.abs().max(1.0));
    }
    for a in 0..y.len() {
        let (mut yp, mut ym) = (y.to_vec(), y.to_vec());
        yp[a] += h;
        ym[a] -= h;
        let fd = (f(x, &yp) - f(x, &ym)) / (2.0 * h);
        let sym = e.dy(a).eval(x, y).unwrap();
        worst = worst.max((fd - sym).abs() / sym.abs().max(1.0));
    }
    worst
}

/// Run the CLI in-process; returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["algebroid-engine"];
    full.extend_from_slice(args);
    let code = algebroid_engine::cli::main_with_args(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
