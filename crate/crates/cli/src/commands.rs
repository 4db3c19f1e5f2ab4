use std::fmt::Write as _;
use std::path::Path;

use finent_core::criteria::run_criterion;
use finent_core::escalate::{multipartite_scan, truncate, verify_escalating, ZERO_TRACE};
use finent_core::states::{format_qstate, gen_isotropic, read_qstate_with, write_qstate};
use finent_core::{
    Bipartition, Certificate, CriterionKind, CriterionResult, DensityState, EscalationConfig, Growth, Outcome, QState,
    StateProvider, Verdict,
};

use crate::report::{list, num, Report};
use crate::source::{family_name, Family};
use crate::{Expect, GenArgs, SweepArgs, TestArgs, VerifyArgs, EXIT_MISMATCH};

type CmdResult = Result<u8, String>;

fn err(e: finent_core::Error) -> String {
    e.to_string()
}

fn partition_for(text: Option<&str>, modes: usize) -> Result<Bipartition, String> {
    match text {
        Some(t) => Bipartition::parse(t, modes).map_err(err),
        None => Bipartition::new(&[0], modes).map_err(err),
    }
}

fn nnz(state: &QState) -> usize {
    match state {
        QState::Pure(psi) => psi.nnz(),
        QState::Density(rho) => rho.matrix().iter().filter(|z| z.norm() != 0.0).count(),
    }
}

fn state_fields(state: &QState) -> Vec<(&'static str, String)> {
    vec![
        ("kind", state.kind().to_string()),
        ("dims", list(state.map().dims())),
        ("trace", num(state.trace())),
        ("nnz", nnz(state).to_string()),
    ]
}

pub fn gen(args: &GenArgs, seed: u64, echo: &str) -> CmdResult {
    let state = args.family.state(seed)?;
    match &args.output {
        Some(path) => {
            write_qstate(&state, path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut report = Report::new(echo, seed);
            let mut fields = args.family.echo();
            fields.push(("output", path.display().to_string()));
            report.record("config", &fields);
            report.record("state", &state_fields(&state));
            print!("{}", report.finish());
        }
        None => print!("{}", format_qstate(&state)),
    }
    Ok(0)
}

fn result_fields(r: &CriterionResult) -> Vec<(&'static str, String)> {
    let mut fields = vec![
        ("criterion", r.criterion.name().to_string()),
        ("value", num(r.value)),
        ("threshold", num(r.threshold)),
        ("verdict", r.verdict.name().to_string()),
    ];
    fields.extend(r.detail.iter().map(|(k, v)| (*k, num(*v))));
    fields
}

pub fn test(args: &TestArgs, seed: u64, echo: &str) -> CmdResult {
    let state = read_qstate_with(&args.input, args.tol.tol_validate).map_err(|e| format!("{}: {e}", args.input.display()))?;
    let criteria = CriterionKind::parse_list(&args.criteria).map_err(err)?;
    let partition = partition_for(args.partition.as_deref(), state.map().num_modes())?;
    let rho = state.to_density();

    let mut report = Report::new(echo, seed);
    report.record(
        "config",
        &[
            ("input", args.input.display().to_string()),
            ("criteria", criteria.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")),
            ("partition", partition.to_string()),
            ("tol_detect", num(args.tol.tol_detect)),
            ("tol_validate", num(args.tol.tol_validate)),
        ],
    );
    report.record("state", &state_fields(&state));
    for kind in criteria {
        let r = run_criterion(kind, &rho, &partition, args.tol.tol_detect).map_err(err)?;
        report.record("criterion", &result_fields(&r));
    }
    print!("{}", report.finish());
    Ok(0)
}

fn certificate_record(report: &mut Report, kind: &str, partition: &Bipartition, c: &Certificate) {
    report.record(
        kind,
        &[
            ("partition", partition.to_string()),
            ("bound_kind", c.witness.bound_kind.name().to_string()),
            ("sep_bound", num(c.witness.sep_bound)),
            ("measured_value", num(c.measured_value)),
            ("margin", num(c.margin)),
            ("subspace_dims", list(&c.subspace_dims)),
            ("operator_dims", list(c.witness.map.dims())),
            ("lifted", c.lifted.to_string()),
        ],
    );
}

fn verdict_records(report: &mut Report, v: &Verdict) {
    let p = v.partition.to_string();
    for step in &v.history {
        let mut fields = vec![
            ("partition", p.clone()),
            ("d", step.d.to_string()),
            ("dims", list(&step.dims)),
            ("captured_trace", num(step.captured_trace)),
        ];
        if let Some(note) = &step.note {
            fields.push(("note", note.clone()));
        }
        report.record("step", &fields);
        for r in &step.results {
            let mut fields = vec![("partition", p.clone()), ("d", step.d.to_string())];
            fields.extend(result_fields(r));
            report.record("result", &fields);
        }
    }
    match &v.outcome {
        Outcome::Entangled { d, dims, criterion, certificate, lifted } => {
            report.record(
                "verdict",
                &[
                    ("partition", p.clone()),
                    ("outcome", "entangled".into()),
                    ("d", d.to_string()),
                    ("dims", list(dims)),
                    ("criterion", criterion.name().into()),
                ],
            );
            certificate_record(report, "certificate", &v.partition, certificate);
            if let Some(l) = lifted {
                certificate_record(report, "lifted_certificate", &v.partition, l);
            }
        }
        Outcome::Undecided { d_max, diagnostics } => {
            report.record(
                "verdict",
                &[("partition", p.clone()), ("outcome", "undecided".into()), ("d_max", d_max.to_string())],
            );
            for message in diagnostics {
                report.record("diagnostic", &[("partition", p.clone()), ("message", message.clone())]);
            }
        }
    }
}

pub fn verify(args: &VerifyArgs, seed: u64, echo: &str) -> CmdResult {
    let (source, mut source_fields): (StateProvider, Vec<(&str, String)>) = match &args.input {
        Some(path) => {
            let state = read_qstate_with(path, args.tol.tol_validate).map_err(|e| format!("{}: {e}", path.display()))?;
            (StateProvider::Finite(state.to_density()), vec![("input", path.display().to_string())])
        }
        None if args.family.family.is_some() => (args.family.provider(seed)?, args.family.echo()),
        None => return Err("verify needs --family or --input".into()),
    };
    let modes = source.num_modes();
    let growth: Growth = args.growth.parse().map_err(err)?;
    let criteria = CriterionKind::parse_list(&args.criteria).map_err(err)?;
    let partition = match (&args.partition, args.scan_bipartitions) {
        (_, true) => None,
        (text, false) => Some(partition_for(text.as_deref(), modes)?),
    };
    let config = EscalationConfig {
        d_start: args.dstart,
        d_max: args.dmax,
        growth,
        criteria,
        tol_detect: args.tol.tol_detect,
        partition: partition.clone(),
    };
    config.validate().map_err(err)?;

    let mut report = Report::new(echo, seed);
    source_fields.extend([
        ("d_start", config.d_start.to_string()),
        ("d_max", config.d_max.to_string()),
        ("growth", config.growth.to_string()),
        ("criteria", config.criteria.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")),
        ("tol_detect", num(config.tol_detect)),
        ("partition", partition.as_ref().map_or("scan".to_string(), |p| p.to_string())),
    ]);
    report.record("config", &source_fields);

    let verdicts = if args.scan_bipartitions {
        multipartite_scan(&source, &config).map_err(err)?.verdicts
    } else {
        vec![verify_escalating(&source, &config).map_err(err)?]
    };
    for v in &verdicts {
        verdict_records(&mut report, v);
    }
    let entangled = verdicts.iter().any(Verdict::is_entangled);
    let outcome = if entangled { "entangled" } else { "undecided" };
    let mut fields = vec![("outcome", outcome.to_string())];
    if let Some(expect) = args.expect {
        let met = entangled == (expect == Expect::Entangled);
        fields.push(("expect", if expect == Expect::Entangled { "entangled" } else { "undecided" }.into()));
        fields.push(("expect_met", met.to_string()));
    }
    report.record("final", &fields);
    print!("{}", report.finish());

    match args.expect {
        Some(expect) if entangled != (expect == Expect::Entangled) => Ok(EXIT_MISMATCH),
        _ => Ok(0),
    }
}

pub const CSV_HEADER: &str = "param,d,criterion,value,verdict,captured_trace";

/// Grid `start + i * step` for `i = 0, 1, ...` up to `stop`; empty when `stop < start`.
fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(format!("sweep range needs finite bounds and a positive step, got {start}:{stop}:{step}"));
    }
    if stop < start {
        return Ok(Vec::new());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // rounding keeps printed grid values free of accumulated binary noise
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn csv_rows(
    out: &mut String,
    param: f64,
    d: usize,
    rho: &DensityState,
    captured: f64,
    criteria: &[CriterionKind],
    partition: &Bipartition,
    tol: f64,
) -> Result<(), String> {
    for &kind in criteria {
        let (value, verdict) = if captured <= ZERO_TRACE {
            (f64::NAN, "skipped")
        } else {
            let r = run_criterion(kind, rho, partition, tol).map_err(err)?;
            (r.value, r.verdict.name())
        };
        writeln!(out, "{param},{d},{},{},{verdict},{}", kind.name(), num(value), num(captured)).unwrap();
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs, seed: u64, echo: &str) -> CmdResult {
    let fam = &args.family;
    let family = fam.family()?;
    let (param_name, default) = match family {
        Family::Isotropic => ("p", fam.p),
        Family::Tmsv => ("lambda", fam.lambda),
        Family::Chik => ("k", fam.k.map(|k| k as f64)),
        other => return Err(format!("family {} has no sweepable parameter", family_name(other))),
    };
    let params = match (args.start, args.stop, args.step) {
        (Some(a), Some(b), Some(s)) => grid(a, b, s)?,
        _ => vec![default.ok_or_else(|| format!("give --{param_name} or --start/--stop/--step"))?],
    };
    let criteria = CriterionKind::parse_list(&args.criteria).map_err(err)?;
    let partition = partition_for(args.partition.as_deref(), 2)?;
    if family != Family::Isotropic && (args.dmin == 0 || args.dmin > args.dmax) {
        return Err(format!("need 1 <= dmin <= dmax, got {}..{}", args.dmin, args.dmax));
    }

    let row_block = |param: f64| -> Result<String, String> {
        let mut out = String::new();
        match family {
            Family::Isotropic => {
                let d = fam.dim.ok_or("--dim is required for isotropic sweeps")?;
                let rho = gen_isotropic(param, d).map_err(err)?;
                csv_rows(&mut out, param, d, &rho, rho.trace(), &criteria, &partition, args.tol_detect)?;
            }
            _ => {
                let mut f = fam.clone();
                match family {
                    Family::Tmsv => f.lambda = Some(param),
                    _ => {
                        if param.fract() != 0.0 || param < 1.0 {
                            return Err(format!("k must be a positive integer, got {param}"));
                        }
                        f.k = Some(param as usize);
                    }
                }
                let source = f.provider(seed)?;
                for d in args.dmin..=args.dmax {
                    let t = truncate(&source, &[d, d]).map_err(err)?;
                    csv_rows(&mut out, param, d, &t.reduced, t.captured_trace, &criteria, &partition, args.tol_detect)?;
                }
            }
        }
        Ok(out)
    };

    // rows are computed in parallel per parameter and emitted in grid order
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(params.len().max(1));
    let chunk = params.len().div_ceil(workers).max(1);
    let blocks: Vec<String> = std::thread::scope(|scope| {
        let handles: Vec<_> = params
            .chunks(chunk)
            .map(|ps| scope.spawn(|| ps.iter().map(|&p| row_block(p)).collect::<Result<Vec<_>, _>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect::<Result<Vec<_>, _>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for b in &blocks {
        csv.push_str(b);
    }
    match &args.output {
        Some(path) => {
            write_atomic(path, &csv).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut report = Report::new(echo, seed);
            let mut fields = fam.echo();
            fields.extend([
                ("param", param_name.to_string()),
                ("points", params.len().to_string()),
                ("criteria", criteria.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")),
                ("partition", partition.to_string()),
                ("tol_detect", num(args.tol_detect)),
                ("output", path.display().to_string()),
            ]);
            if family != Family::Isotropic {
                fields.extend([("dmin", args.dmin.to_string()), ("dmax", args.dmax.to_string())]);
            }
            report.record("config", &fields);
            report.record("sweep", &[("rows", csv.lines().count().saturating_sub(1).to_string())]);
            print!("{}", report.finish());
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn bipartitions(modes: usize) -> CmdResult {
    for p in finent_core::escalate::bipartitions(modes).map_err(err)? {
        println!("{p}");
    }
    Ok(0)
}
