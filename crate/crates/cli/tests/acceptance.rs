//! Acceptance criteria 1 to 8.
//!
//! Every criterion is evaluated and reported on its own line before the
//! test asserts, so one failure does not hide the others.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, SQRT_2, TAU};
use std::io::{self, Write};
use std::time::{Duration, Instant};

use common::mzi;
use mzi_qkd::hilbert::{c, CMat, Tensor, TOL};
use mzi_qkd::measurement::{
    apparatus_unitary, chsh_exact, chsh_sampled, coincidence_probability, pair_distribution,
    ChshAngles,
};
use mzi_qkd::optics::{StoredMatrix, Transcription};
use mzi_qkd::protocol::{
    detection_curve, run_session_with_workers, SessionConfig, SessionReport, Verdict,
};
use mzi_qkd::source::psi_plus;
use mzi_qkd::verify::run_identity_suite;
use mzi_qkd::{Apparatus, AttackModel, Phase, PortPolarization, RngStream};

const N: u64 = 100_000;

type Criterion = fn() -> (bool, String);

struct Verdicts {
    lines: Vec<(u8, bool, String)>,
}

impl Verdicts {
    fn record(&mut self, criterion: u8, passed: bool, detail: String) {
        // written past the harness's output capture so the lines always show
        let _ = writeln!(
            io::stderr(),
            "criterion {criterion}: {}  {detail}",
            if passed { "PASS" } else { "FAIL" }
        );
        self.lines.push((criterion, passed, detail));
    }
}

fn session(attack: AttackModel, workers: usize) -> SessionReport {
    let config = SessionConfig {
        n_pairs: N,
        attack,
        seed: 1,
        ..SessionConfig::default()
    };
    run_session_with_workers(&config, workers).expect("valid config")
}

fn within(x: Option<f64>, lo: f64, hi: f64) -> bool {
    x.is_some_and(|x| (lo..=hi).contains(&x))
}

fn algebraic_suite() -> (bool, String) {
    let start = Instant::now();
    let out = mzi(&["verify"]);
    let elapsed = start.elapsed();
    let checks = out
        .stdout
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .count();
    let report = run_identity_suite(&Transcription::canonical());
    let worst = report
        .checks
        .iter()
        .map(|c| c.deviation)
        .fold(0.0, f64::max);
    let required = [
        "Eq3", "Eq4", "Eq5", "Eq13", "Eq14", "Eq15", "Eq16", "Eq17", "Eq18", "Eq19", "Eq21",
        "Eq22", "Eq24", "Eq25",
    ];
    let covered = required
        .iter()
        .all(|tag| report.checks.iter().any(|c| c.equations.contains(tag)));
    let passed = out.code == 0
        && report.passed()
        && covered
        && worst <= TOL
        && elapsed < Duration::from_secs(1);
    (
        passed,
        format!(
            "verify exit {}, {checks} checks, all equations covered: {covered}, max deviation {worst:.1e}, {:.3} s",
            out.code,
            elapsed.as_secs_f64()
        ),
    )
}

fn coincidence_law() -> (bool, String) {
    let start = Instant::now();
    let state = psi_plus();
    let ports = PortPolarization::ALL;
    let projectors: Vec<CMat> = ports
        .iter()
        .flat_map(|a| {
            ports.iter().map(move |b| {
                CMat::projector(&a.ket())
                    .unwrap()
                    .tensor(&CMat::projector(&b.ket()).unwrap())
            })
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        for j in 0..30 {
            let (alpha, beta) = (
                Phase::new(TAU * i as f64 / 30.0),
                Phase::new(TAU * j as f64 / 30.0),
            );
            let u = apparatus_unitary(Apparatus::Interferometer { phase: alpha }).tensor(
                &apparatus_unitary(Apparatus::Interferometer { phase: beta }),
            );
            let out = u.apply(state.amplitudes()).unwrap();
            for (k, p) in projectors.iter().enumerate() {
                let expectation = out.inner(&p.apply(&out).unwrap()).unwrap();
                let joint = (ports[k / 4], ports[k % 4]);
                worst = worst.max(
                    (expectation - c(coincidence_probability(alpha, beta, joint), 0.0)).norm(),
                );
            }
        }
    }

    let settings = [
        (0.0, 0.0),
        (0.0, FRAC_PI_2),
        (FRAC_PI_3, 2.0),
        (1.1, 4.0),
        (PI, 0.0),
    ];
    let (mut cells, mut bad_cells) = (0, 0);
    for (s, (alpha, beta)) in settings.into_iter().enumerate() {
        let dist = pair_distribution(
            &state,
            Apparatus::interferometer(alpha),
            Apparatus::interferometer(beta),
        );
        let mut counts = [0u64; 16];
        for k in 0..N {
            let mut rng = RngStream::new(1, s as u64 * N + k);
            let (a, b) = dist.sample(&mut rng);
            counts[a.index() * 4 + b.index()] += 1;
        }
        for (&count, &p) in counts.iter().zip(dist.probabilities()) {
            let freq = count as f64 / N as f64;
            let sigma = (p * (1.0 - p) / N as f64).sqrt();
            cells += 1;
            if (freq - p).abs() > 3.0 * sigma {
                bad_cells += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let passed = worst <= 1e-12 && bad_cells == 0 && elapsed < Duration::from_secs(30);
    (
        passed,
        format!(
            "30x30 grid max deviation {worst:.1e}, Monte Carlo {bad_cells}/{cells} cells outside 3 sigma, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn bell_violation() -> (bool, String) {
    let angles = ChshAngles {
        a: Phase::ZERO,
        a_prime: Phase::new(FRAC_PI_2),
        b: Phase::new(FRAC_PI_4),
        b_prime: Phase::new(3.0 * FRAC_PI_4),
    };
    let exact = chsh_exact(&angles).s;
    let sampled = chsh_sampled(&angles, N, 1).s;
    let passed = (exact - 2.0 * SQRT_2).abs() <= 1e-12 && (sampled - exact).abs() <= 0.05;
    (
        passed,
        format!("exact S = {exact:.16}, sampled S = {sampled:.5}"),
    )
}

fn clean_protocol() -> (bool, String) {
    let r = session(AttackModel::NoAttack, 4);
    let passed = r.linear_test.qber == Some(0.0)
        && r.circular_test.qber == Some(0.0)
        && r.key.agreement_rate == Some(1.0)
        && r.verdict == Verdict::Clean;
    (
        passed,
        format!(
            "linear qber {:?}, circular qber {:?}, agreement {:?}, {:?}",
            r.linear_test.qber, r.circular_test.qber, r.key.agreement_rate, r.verdict
        ),
    )
}

fn intercept_resend() -> (bool, String) {
    let r = session(AttackModel::InterceptResendCircular, 4);
    let passed = within(r.linear_test.qber, 0.485, 0.515)
        && within(r.circular_test.qber, 0.0, 0.005)
        && r.verdict == Verdict::EavesdropperDetected
        && r.eve.knowledge_rate == Some(1.0);
    (
        passed,
        format!(
            "linear qber {:?}, circular qber {:?}, {:?}, eve knowledge {:?}",
            r.linear_test.qber, r.circular_test.qber, r.verdict, r.eve.knowledge_rate
        ),
    )
}

fn nasty_attack() -> (bool, String) {
    let r = session(AttackModel::nasty(), 4);
    let curve = detection_curve(AttackModel::nasty(), 10);
    let at_ten = curve.last().map(|&(_, p)| p).unwrap_or(f64::NAN);
    let passed = within(r.linear_test.qber, 0.0, 0.005)
        && within(r.circular_test.qber, 0.485, 0.515)
        && (at_ten - (1.0 - 2f64.powi(-10))).abs() <= 1e-12;
    (
        passed,
        format!(
            "linear qber {:?}, circular qber {:?} ({} tested), detection after 10 tests {at_ten:.16}",
            r.linear_test.qber, r.circular_test.qber, r.circular_test.tested
        ),
    )
}

fn determinism() -> (bool, String) {
    let commands: [&[&str]; 5] = [
        &["verify"],
        &[
            "run",
            "--pairs",
            "20000",
            "--attack",
            "intercept",
            "--seed",
            "1",
        ],
        &[
            "run", "--pairs", "20000", "--attack", "nasty", "--seed", "1", "--format", "csv",
        ],
        &[
            "bell", "--mode", "sample", "--pairs", "20000", "--format", "json",
        ],
        &[
            "coincidence-scan",
            "--alpha-grid",
            "0:6.283185307179586:31",
            "--beta",
            "0.5",
        ],
    ];
    let repeatable = commands.iter().all(|args| {
        let (a, b) = (mzi(args), mzi(args));
        a.code == b.code && a.stdout == b.stdout && !a.stdout.is_empty()
    });
    let base = session(
        AttackModel::PathBlock {
            side: mzi_qkd::Side::Alice,
            path: mzi_qkd::Path::Upper,
        },
        1,
    );
    let workers_agree = [2, 4, 8].into_iter().all(|w| {
        session(
            AttackModel::PathBlock {
                side: mzi_qkd::Side::Alice,
                path: mzi_qkd::Path::Upper,
            },
            w,
        ) == base
    });
    let cli_run = [
        "run",
        "--pairs",
        "20000",
        "--attack",
        "block",
        "--seed",
        "1",
        "--workers",
    ];
    let one = mzi(&[&cli_run[..], &["1"]].concat()).stdout;
    let cli_agree = ["2", "4", "8"]
        .into_iter()
        .all(|w| mzi(&[&cli_run[..], &[w]].concat()).stdout == one);
    (
        repeatable && workers_agree && cli_agree,
        format!(
            "repeated commands byte-identical: {repeatable}, reports equal for 1/2/4/8 workers: {workers_agree}, cli output equal across workers: {cli_agree}"
        ),
    )
}

fn fault_injection() -> (bool, String) {
    let (mut injected, mut named) = (0, 0);
    for which in StoredMatrix::ALL {
        let dim = Transcription::canonical().matrix(which).dim();
        for row in 0..dim {
            for col in 0..dim {
                for delta in [c(1e-6, 0.0), c(-1e-6, 0.0), c(0.0, 1e-6)] {
                    let mut t = Transcription::canonical();
                    let m = t.matrix_mut(which);
                    m.set(row, col, m.get(row, col) + delta);
                    let report = run_identity_suite(&t);
                    injected += 1;
                    if !report.passed() && report.failing_equations().contains(&which.equation()) {
                        named += 1;
                    }
                }
            }
        }
    }
    let cli = [
        ("ev-mirror:1:2:1e-6", "Eq2"),
        ("beam-splitter:2:3:1e-6", "Eq9"),
        ("half-wave-plate:4:4:0:1e-6", "Eq10"),
        ("phase-shifter-phased:1:1:1e-6", "Eq11"),
        ("phase-shifter-fixed:3:3:-1e-6", "Eq11"),
        ("symmetric-mirror:1:3:1e-6", "Eq12"),
        ("interferometer-phased:1:1:2", "Eq13"),
        ("interferometer-fixed:4:4:1e-6", "Eq13"),
    ];
    let cli_named = cli.iter().all(|(perturbation, tag)| {
        let out = mzi(&["verify", "--perturb", perturbation]);
        out.code != 0
            && out.stdout.lines().last().is_some_and(|l| {
                l.starts_with("failing equations:") && l.split_whitespace().any(|t| t == *tag)
            })
    });
    (
        named == injected && cli_named,
        format!("{named}/{injected} single-entry perturbations named their equation, cli verify names it: {cli_named}"),
    )
}

#[test]
fn acceptance_criteria() {
    let mut v = Verdicts { lines: Vec::new() };
    let criteria: [(u8, Criterion); 8] = [
        (1, algebraic_suite),
        (2, coincidence_law),
        (3, bell_violation),
        (4, clean_protocol),
        (5, intercept_resend),
        (6, nasty_attack),
        (7, determinism),
        (8, fault_injection),
    ];
    for (k, check) in criteria {
        let (passed, detail) = check();
        v.record(k, passed, detail);
    }
    let failed: Vec<u8> = v.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
