//! Text and CSV renderings. JSON goes through [`crate::json`].

use std::fmt::Write;

use mzi_qkd::measurement::{ChshAngles, ChshResult};
use mzi_qkd::protocol::{SessionReport, Verdict};
use mzi_qkd::verify::VerifyReport;
use mzi_qkd::{AttackModel, Path, Phase, Side, SourceKind};

use crate::json::real;

pub fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer");
    String::from_utf8(bytes).expect("csv fields are utf-8")
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// `α rad (plane α/2 rad)`.
pub fn phase_text(p: Phase) -> String {
    format!("{:.6} rad (plane {:.6} rad)", p.radians(), p.plane_angle())
}

pub fn attack_name(a: AttackModel) -> &'static str {
    match a {
        AttackModel::NoAttack => "none",
        AttackModel::InterceptResendCircular => "intercept",
        AttackModel::NastySendLinear { .. } => "nasty",
        AttackModel::PathBlock { .. } => "block",
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Alice => "alice",
        Side::Bob => "bob",
    }
}

fn path_name(p: Path) -> &'static str {
    match p {
        Path::Upper => "upper",
        Path::Lower => "lower",
    }
}

fn source_name(s: SourceKind) -> &'static str {
    match s {
        SourceKind::PsiPlus => "psi+",
        SourceKind::PsiMinus => "psi-",
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Clean => "clean",
        Verdict::EavesdropperDetected => "eavesdropper_detected",
        Verdict::Aborted => "aborted",
    }
}

const RUN_COLUMNS: [&str; 24] = [
    "n_pairs",
    "attack",
    "resend_phase",
    "block_side",
    "block_path",
    "seed",
    "sacrifice_fraction",
    "abort_qber_threshold",
    "source",
    "vv",
    "vu",
    "uv",
    "uu",
    "lost",
    "linear_tested",
    "linear_mismatches",
    "linear_qber",
    "circular_tested",
    "circular_mismatches",
    "circular_qber",
    "key_length",
    "key_agreement_rate",
    "eve_knowledge_rate",
    "verdict",
];

/// Header plus one row. Undefined rates are empty fields; the sifted keys
/// are left out.
pub fn run_csv(r: &SessionReport) -> String {
    let c = &r.config;
    let (resend, side, path) = match c.attack {
        AttackModel::NastySendLinear { resend_axis } => (real(resend_axis.radians()), "", ""),
        AttackModel::PathBlock { side, path } => (String::new(), side_name(side), path_name(path)),
        _ => (String::new(), "", ""),
    };
    let row = [
        c.n_pairs.to_string(),
        attack_name(c.attack).to_string(),
        resend,
        side.to_string(),
        path.to_string(),
        c.seed.to_string(),
        real(c.sacrifice_fraction),
        real(c.abort_qber_threshold),
        source_name(c.source).to_string(),
        r.counts.vv.to_string(),
        r.counts.vu.to_string(),
        r.counts.uv.to_string(),
        r.counts.uu.to_string(),
        r.counts.lost.to_string(),
        r.linear_test.tested.to_string(),
        r.linear_test.mismatches.to_string(),
        opt_real(r.linear_test.qber),
        r.circular_test.tested.to_string(),
        r.circular_test.mismatches.to_string(),
        opt_real(r.circular_test.qber),
        r.key.length.to_string(),
        opt_real(r.key.agreement_rate),
        opt_real(r.eve.knowledge_rate),
        verdict_name(r.verdict).to_string(),
    ];
    let mut w = csv_writer();
    w.write_record(RUN_COLUMNS).expect("in-memory write");
    w.write_record(&row).expect("in-memory write");
    finish(w)
}

fn rate(x: Option<f64>) -> String {
    x.map(|x| format!("{x:.6}")).unwrap_or_else(|| "n/a".into())
}

pub fn run_human(r: &SessionReport) -> String {
    let c = &r.config;
    let mut s = String::new();
    let attack = match c.attack {
        AttackModel::NastySendLinear { resend_axis } => {
            format!("nasty, resends phase {}", phase_text(resend_axis))
        }
        AttackModel::PathBlock { side, path } => {
            format!("block, {} {} arm", side_name(side), path_name(path))
        }
        a => attack_name(a).to_string(),
    };
    writeln!(s, "pairs          {}", c.n_pairs).unwrap();
    writeln!(s, "seed           {}", c.seed).unwrap();
    writeln!(s, "source         {}", source_name(c.source)).unwrap();
    writeln!(s, "attack         {attack}").unwrap();
    writeln!(s, "sacrifice      {}", c.sacrifice_fraction).unwrap();
    writeln!(s, "threshold      {}", c.abort_qber_threshold).unwrap();
    writeln!(
        s,
        "bases          VV {}  VU {}  UV {}  UU {}  lost {}",
        r.counts.vv, r.counts.vu, r.counts.uv, r.counts.uu, r.counts.lost
    )
    .unwrap();
    for (name, t) in [
        ("linear test", &r.linear_test),
        ("circular test", &r.circular_test),
    ] {
        writeln!(
            s,
            "{name:<15}{} of {} mismatched, qber {}",
            t.mismatches,
            t.tested,
            rate(t.qber)
        )
        .unwrap();
    }
    writeln!(
        s,
        "key            {} bits, agreement {}",
        r.key.length,
        rate(r.key.agreement_rate)
    )
    .unwrap();
    if r.eve.present {
        writeln!(s, "eve knowledge  {}", rate(r.eve.knowledge_rate)).unwrap();
    }
    writeln!(
        s,
        "verdict        {}",
        verdict_name(r.verdict).replace('_', " ")
    )
    .unwrap();
    s
}

pub fn bell_csv(angles: &ChshAngles, result: &ChshResult) -> String {
    let mut w = csv_writer();
    w.write_record(["term", "alpha", "beta", "sign", "correlation", "pairs"])
        .expect("in-memory write");
    for ((_, _, sign), t) in angles.settings().iter().zip(&result.terms) {
        w.write_record([
            "E".to_string(),
            real(t.alpha.radians()),
            real(t.beta.radians()),
            format!("{sign:+}"),
            real(t.correlation),
            t.pairs.map(|n| n.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    w.write_record(["S", "", "", "", &real(result.s), ""])
        .expect("in-memory write");
    finish(w)
}

pub fn bell_human(result: &ChshResult) -> String {
    let mut s = String::new();
    for t in &result.terms {
        writeln!(
            s,
            "E(alpha = {}, beta = {}) = {:.6}",
            phase_text(t.alpha),
            phase_text(t.beta),
            t.correlation
        )
        .unwrap();
    }
    writeln!(s, "S = {}", real(result.s)).unwrap();
    writeln!(
        s,
        "classical bound 2, quantum bound {}",
        real(2.0 * 2f64.sqrt())
    )
    .unwrap();
    s
}

pub fn verify_human(report: &VerifyReport) -> String {
    let mut s = String::new();
    for c in &report.checks {
        writeln!(
            s,
            "{}  {:<24} {:<48} max deviation {:.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.tag(),
            c.name,
            c.deviation
        )
        .unwrap();
    }
    let failed = report.failures().count();
    writeln!(s, "{} checks, {} failed", report.checks.len(), failed).unwrap();
    if failed > 0 {
        writeln!(
            s,
            "failing equations: {}",
            report.failing_equations().join(" ")
        )
        .unwrap();
    }
    s
}
