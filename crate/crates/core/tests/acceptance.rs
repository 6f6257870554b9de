//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on failure.

use std::time::Instant;

use frrd::config::RunConfig;
use frrd::correction::Backend;
use frrd::entropy::tau_correction;
use frrd::mesh::{generators, Mesh};
use frrd::physics::{Law, FluxKind};
use frrd::residual::{BoundaryData, Profile, Scheme, SchemeOptions};
use frrd::study::run_study;
use frrd::verify::{self, Suite, SuiteReport, VerifyOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

fn meshes() -> Vec<(&'static str, Mesh)> {
    vec![
        ("triangles", generators::perturb_interior(&generators::unit_square_triangles(2), 0.15, 11)),
        ("quads", generators::perturb_interior(&generators::unit_square_quads(2), 0.15, 12)),
        ("hexagons", generators::honeycomb(1, 0.4)),
    ]
}

fn scheme(mesh: &Mesh, law: Law, degree: usize, backend: Backend, flux: FluxKind) -> Scheme {
    let boundary = BoundaryData::uniform(Profile::Sine { amplitude: 0.5, kx: 1.0, ky: 2.0, phase: 0.3, offset: 0.2 });
    Scheme::new(mesh.clone(), law, boundary, SchemeOptions { degree, backend, flux, ..Default::default() }).expect("scheme builds")
}

fn burgers(mesh: &Mesh) -> Scheme {
    scheme(mesh, Law::burgers_2d(), 1, Backend::Auto, FluxKind::Rusanov)
}

fn options(draws: usize, seed: u64) -> VerifyOptions {
    VerifyOptions { draws, seed, ..Default::default() }
}

/// Runs `suite` on every scheme and keeps the named checks.
fn suites(schemes: &[(&str, Scheme)], suite: Suite, opts: VerifyOptions, keep: impl Fn(&str) -> bool) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, s) in schemes {
        let report: SuiteReport = verify::run(s, suite, &opts).expect("suite runs");
        let mut worst: Option<(f64, &str)> = None;
        let mut count = 0;
        for c in report.checks.iter().filter(|c| keep(&c.name)) {
            count += 1;
            if !c.pass {
                pass = false;
                detail.push(format!("{name}: {c}"));
            }
            if c.tolerance.is_finite() && c.tolerance > 0.0 {
                let ratio = match c.bound {
                    verify::Bound::Lower => -c.value / c.tolerance,
                    _ => c.value / c.tolerance,
                };
                if worst.is_none_or(|(w, _)| ratio > w) {
                    worst = Some((ratio, &c.name));
                }
            }
        }
        if count == 0 {
            pass = false;
            detail.push(format!("{name}: no checks"));
        }
        if let Some((r, c)) = worst {
            detail.push(format!("{name} worst {c} at {r:.2e} of tolerance"));
        }
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn criterion_1() -> Outcome {
    let schemes: Vec<_> = meshes().into_iter().map(|(n, m)| (n, burgers(&m))).collect();
    let start = Instant::now();
    let mut out = suites(&schemes, Suite::Conservation, options(10_000, 1), |_| true);
    let secs = start.elapsed().as_secs_f64();
    out.pass &= secs < 30.0;
    out.detail = format!("{:.1} s; {}", secs, out.detail);
    out
}

fn criterion_2() -> Outcome {
    let mut schemes = Vec::new();
    for (n, m) in meshes() {
        schemes.push((n, burgers(&m)));
        if n == "triangles" {
            schemes.push(("triangles k=2", scheme(&m, Law::burgers_2d(), 2, Backend::Auto, FluxKind::Rusanov)));
        }
    }
    suites(&schemes, Suite::CorrectionAdmissibility, options(1_000, 2), |c| c.starts_with("eq21") || c.starts_with("eq27"))
}

fn criterion_3() -> Outcome {
    let schemes: Vec<_> = meshes().into_iter().map(|(n, m)| (n, burgers(&m))).collect();
    suites(&schemes, Suite::CorrectionAdmissibility, options(1_000, 3), |c| c.starts_with("eq26"))
}

fn criterion_4() -> Outcome {
    let t = tau_correction(&[0.0, 1.0, 2.0], 1.0, 1.0).expect("non-degenerate");
    let hand = t.tau == [-0.5, 0.0, 0.5];
    let schemes: Vec<_> = meshes().into_iter().map(|(n, m)| (n, burgers(&m))).collect();
    let mut out = suites(&schemes, Suite::EntropyCs, options(10_000, 4), |c| c == "eq32 cs balance" || c == "tau sum" || c == "tau hand case");
    out.pass &= hand;
    out.detail = format!("hand case tau = {:?}; {}", t.tau, out.detail);
    out
}

fn criterion_5() -> Outcome {
    let schemes: Vec<_> = meshes().into_iter().map(|(n, m)| (n, burgers(&m))).collect();
    suites(&schemes, Suite::EntropySt, options(10_000, 5), |c| c == "eq44 st margin")
}

fn criterion_6() -> Outcome {
    let m = generators::perturb_interior(&generators::unit_square_triangles(3), 0.15, 13);
    let schemes = vec![
        ("triangles rusanov", burgers(&m)),
        ("triangles adv", scheme(&m, Law::linear_advection([1.0, 0.5]), 1, Backend::Auto, FluxKind::Rusanov)),
        ("triangles ec", scheme(&m, Law::burgers_2d(), 1, Backend::Auto, FluxKind::TadmorEc)),
    ];
    suites(&schemes, Suite::Tadmor, options(1_000, 6), |c| {
        c.starts_with("eq54") || c.starts_with("eq63") || c.starts_with("eq58") || c == "C_K forms agree"
    })
}

fn case(name: &str) -> RunConfig {
    RunConfig::load(format!("{}/../../cases/{name}", env!("CARGO_MANIFEST_DIR"))).expect("case loads")
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for (file, k) in [("sine_order_k1.json", 1.0), ("sine_order_k2.json", 2.0)] {
        let out = match run_study(&case(file), 0, 1.0) {
            Ok(o) => o,
            Err(e) => return Outcome { pass: false, detail: format!("{file}: {e}") },
        };
        let r = &out.report;
        let elems: Vec<_> = r.levels.iter().map(|l| l.elements).collect();
        pass &= r.levels.iter().all(|l| l.termination == frrd::solver::Termination::Converged);
        let last = r.orders.last().expect("several levels");
        let (l2, ent) = (last.l2.unwrap_or(f64::NAN), last.entropy_defect.unwrap_or(f64::NAN));
        pass &= l2 >= k + 0.7 && ent >= k + 2.5;
        let l2s: Vec<_> = r.orders.iter().map(|o| format!("{:.2}", o.l2.unwrap_or(f64::NAN))).collect();
        let ents: Vec<_> = r.orders.iter().map(|o| format!("{:.2}", o.entropy_defect.unwrap_or(f64::NAN))).collect();
        detail.push(format!("k={k} elements {elems:?} L2 orders [{}] entropy orders [{}]", l2s.join(", "), ents.join(", ")));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    Outcome { pass, detail: format!("{:.1} s; {}", secs, detail.join("; ")) }
}

fn criterion_8() -> Outcome {
    let out = match run_study(&case("linear_exact.json"), 0, 1.0) {
        Ok(o) => o,
        Err(e) => return Outcome { pass: false, detail: e.to_string() },
    };
    let l = &out.report.levels[0];
    let l2 = l.l2_error.unwrap_or(f64::INFINITY);
    let pass = l.elements == 32 && l.termination == frrd::solver::Termination::Converged && l.iterations < 10_000 && l2 <= 1e-8;
    Outcome { pass, detail: format!("{} elements, {} iterations, L2 error {l2:.2e}", l.elements, l.iterations) }
}

fn criterion_9() -> Outcome {
    let mut schemes = Vec::new();
    for (n, m) in meshes() {
        schemes.push((n, burgers(&m)));
        schemes.push((n, scheme(&m, Law::linear_advection([1.0, 0.5]), 1, Backend::Auto, FluxKind::Rusanov)));
        if n != "hexagons" {
            schemes.push((n, scheme(&m, Law::burgers_2d(), 2, Backend::Auto, FluxKind::Rusanov)));
        }
    }
    suites(&schemes, Suite::Identities, options(500, 9), |c| c.starts_with("eq31"))
}

fn criterion_10() -> Outcome {
    let mut cfg = case("sine_order_k1.json");
    cfg.levels = 2;
    cfg.initial_noise = 0.1;
    let a = run_study(&cfg, 42, 1.0).expect("study runs");
    let b = run_study(&cfg, 42, 1.0).expect("study runs");
    let same_report = serde_json::to_string(&a.report.numerics()).unwrap() == serde_json::to_string(&b.report.numerics()).unwrap();
    let same_rows = serde_json::to_string(&a.elements).unwrap() == serde_json::to_string(&b.elements).unwrap();
    let s = burgers(&meshes()[0].1);
    let va = serde_json::to_string(&verify::run(&s, Suite::EntropyCs, &options(200, 42)).unwrap()).unwrap();
    let vb = serde_json::to_string(&verify::run(&s, Suite::EntropyCs, &options(200, 42)).unwrap()).unwrap();
    Outcome {
        pass: same_report && same_rows && va == vb,
        detail: format!("report {same_report}, element rows {same_rows}, verify {}", va == vb),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 conservation", criterion_1),
        ("2 correction admissibility", criterion_2),
        ("3 fr = dg + r", criterion_3),
        ("4 entropy-conservative correction", criterion_4),
        ("5 entropy stability", criterion_5),
        ("6 tadmor diagnostics", criterion_6),
        ("7 order verification", criterion_7),
        ("8 exactness", criterion_8),
        ("9 global identity", criterion_9),
        ("10 determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {name} ({:.1} s): {}", start.elapsed().as_secs_f64(), out.detail);
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
