use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use learning_graph::certificate::{
    build_certificate, build_certificate_exact, objective_value, verify_feasibility, verify_feasibility_exact,
    CertificateBundle,
};
use learning_graph::complexity::{
    complexity_and_flows, complexity_and_flows_exact, complexity_with_flows, ComplexityReport,
};
use learning_graph::concentration::{
    default_lambda_grid, estimate_subtuples, key_flow_ratio_check, martingale_tail_check, modal_spec,
    type_deviation_tail, SamplerConfig, TailReport,
};
use learning_graph::domain::Domain;
use learning_graph::exact::Surd;
use learning_graph::flow::Flow;
use learning_graph::formats::{parse_certificate, write_certificate, write_pair_csv, GraphDocument, TextValue};
use learning_graph::kdist::{
    build_alg1_tiny, build_baseline_graph, build_promised_instance, collapsed_estimate, count_by_specification,
    expected_subtuples, rho_exponents, scaling_experiment, Construction, Promise, Schedule, StageParams,
};
use learning_graph::scalar::Scalar;
use learning_graph::symmetry::{group_elements, symmetrize as group_average, GroupMode, Specification};
use learning_graph::weights::{materialize_on, ExactWeights, WeightFunction, WeightTable};
use learning_graph::Error;
use num::{BigRational, ToPrimitive};

use crate::{Ctx, Failure};

type Outcome = Result<(), Failure>;

fn input_path(ctx: &Ctx) -> Result<&Path, Failure> {
    ctx.input
        .as_deref()
        .ok_or_else(|| Error::Input(format!("`{}` needs --in <file>", ctx.command)).into())
}

fn output_path(ctx: &Ctx) -> Result<&Path, Failure> {
    ctx.out
        .as_deref()
        .ok_or_else(|| Error::Input(format!("`{}` needs --out <file>", ctx.command)).into())
}

fn read_input(ctx: &Ctx) -> Result<String, Failure> {
    let path = input_path(ctx)?;
    std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())).into())
}

/// Writes `body` after the provenance header.
fn write_artifact(ctx: &Ctx, path: &Path, body: &[u8]) -> Outcome {
    let mut data = ctx.provenance().header().into_bytes();
    data.extend_from_slice(body);
    std::fs::write(path, data).map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn promise(ctx: &Ctx) -> Result<Promise, Failure> {
    let ell: Vec<usize> = ctx.kv.list("l")?.ok_or_else(|| Error::Input("missing required option l=".into()))?;
    let k = ell.len() + 1;
    if let Some(given) = ctx.kv.number::<usize>("k")? {
        if given != k {
            return Err(Error::Input(format!("k={given} but l= lists {} counts", ell.len())).into());
        }
    }
    Ok(Promise::new(k, ell)?)
}

fn specification(ctx: &Ctx, k: usize) -> Result<Option<Specification>, Failure> {
    let Some(b) = ctx.kv.list::<usize>("spec")? else { return Ok(None) };
    if b.len() != k - 1 {
        return Err(Error::Input(format!("spec= needs {} entries for k = {k}", k - 1)).into());
    }
    Ok(Some(Specification(b)))
}

fn sampler(ctx: &Ctx) -> Result<SamplerConfig, Failure> {
    Ok(SamplerConfig::new(ctx.global.seed, ctx.global.trials)?)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

pub fn params(ctx: &Ctx) -> Outcome {
    ctx.kv.reject_unknown(&["k", "n"])?;
    let k: usize = ctx.kv.require("k")?;
    let rho = rho_exponents(k)?;
    println!("rho = {}; exponent = {}", join(&rho), rho[1]);
    if let Some(n) = ctx.kv.number::<usize>("n")? {
        let p = StageParams::from_exponents(k, n)?;
        println!("r = {}", join(p.sizes()));
        println!("depth = {}", Schedule::uncapped(p.clone()).depth());
        for w in p.asymptotic_warnings() {
            println!("warning: {w}");
        }
    }
    Ok(())
}

pub fn count(ctx: &Ctx) -> Outcome {
    ctx.kv.reject_unknown(&["k", "l", "spec"])?;
    let p = promise(ctx)?;
    let spec = specification(ctx, p.k)?.ok_or_else(|| Error::Input("missing required option spec=".into()))?;
    println!("{}", count_by_specification(&p, &spec)?);
    Ok(())
}

pub fn expect(ctx: &Ctx) -> Outcome {
    ctx.kv.reject_unknown(&["k", "l", "r", "t", "mc"])?;
    let p = promise(ctx)?;
    let r: usize = ctx.kv.require("r")?;
    let t: usize = ctx.kv.require("t")?;
    let e = expected_subtuples(&p, r, t)?;
    let ef = e.to_f64().unwrap_or(f64::NAN);
    println!("expected = {e} ({ef})");
    if ctx.kv.number::<bool>("mc")?.unwrap_or(false) {
        let est = estimate_subtuples(&p, r, t, sampler(ctx)?)?;
        let z = if est.stderr > 0.0 { (est.mean - ef) / est.stderr } else { 0.0 };
        println!(
            "monte carlo = {} +/- {} (z = {z:.3}, {} trials)",
            est.mean, est.stderr, est.samples
        );
    }
    Ok(())
}

pub fn build(ctx: &Ctx) -> Outcome {
    let out = output_path(ctx)?;
    let construction = ctx.kv.get("construction").unwrap_or("baseline");
    let doc: GraphDocument<BigRational> = match construction {
        "baseline" => {
            ctx.kv.reject_unknown(&["construction", "k", "n", "m", "r"])?;
            let k = ctx.kv.number("k")?.unwrap_or(2usize);
            let n: usize = ctx.kv.require("n")?;
            let m = ctx.kv.number("m")?.unwrap_or(n as u32);
            let r = match ctx.kv.number::<usize>("r")? {
                Some(r) => r,
                None => {
                    let r = (n as f64).powf(k as f64 / (k + 1) as f64).round() as usize;
                    r.clamp(1, n.saturating_sub(k).max(1))
                }
            };
            let art = build_baseline_graph(k, n, m, r, ctx.global.cap_inputs)?;
            if art.graph.num_vertices() > ctx.global.cap_vertices {
                return Err(Error::Resource(format!(
                    "graph has {} vertices, above --cap-vertices",
                    art.graph.num_vertices()
                ))
                .into());
            }
            let weights = tabulate(&art.graph, &art.weights, &art.domain)?;
            GraphDocument {
                graph: art.graph,
                function: Some(art.domain.spec().clone()),
                weights,
                inputs: Vec::new(),
                flows: art.flows,
            }
        }
        "alg1" | "staged" => {
            ctx.kv.reject_unknown(&["construction", "k", "n", "l", "r", "images"])?;
            let p = promise(ctx)?;
            let n: usize = ctx.kv.require("n")?;
            let params = match ctx.kv.list::<usize>("r")? {
                Some(r) => StageParams::new(p.k, n, r)?,
                None => StageParams::from_exponents(p.k, n)?,
            };
            let images = ctx.kv.number("images")?.unwrap_or(1usize);
            let inst = build_promised_instance(p.k, n, &p.ell, ctx.global.seed)?;
            let schedule = Schedule::new(params, &inst.promise)?;
            let art = build_alg1_tiny(schedule, &inst, images, ctx.global.seed, ctx.global.cap_vertices)?;
            let weights = tabulate(&art.graph, &art.weights, &art.domain)?;
            GraphDocument {
                graph: art.graph,
                function: Some(art.domain.spec().clone()),
                weights,
                inputs: art.domain.points().iter().map(|(x, _)| x.clone()).collect(),
                flows: art.flows,
            }
        }
        other => {
            return Err(Error::Input(format!("unknown construction {other:?}; use baseline or alg1")).into());
        }
    };
    let body = doc.to_text()?;
    write_artifact(ctx, out, body.as_bytes())?;
    eprintln!(
        "wrote {} ({} vertices, {} arcs, {} flows)",
        out.display(),
        doc.graph.num_vertices(),
        doc.graph.num_arcs(),
        doc.flows.len()
    );
    // report on the file as written, so `complexity` on it agrees exactly
    let reread = GraphDocument::<BigRational>::parse(&body)?;
    print!("{}", complexity_text(ctx, &reread)?);
    Ok(())
}

fn tabulate<W: WeightFunction<f64> + ?Sized>(
    g: &learning_graph::graph::LearningGraph,
    w: &W,
    domain: &Domain,
) -> Result<WeightTable<f64>, Failure> {
    Ok(materialize_on(g, w, domain.points().iter().map(|(x, _)| x.clone()))?)
}

fn load_graph(ctx: &Ctx) -> Result<GraphDocument<BigRational>, Failure> {
    Ok(GraphDocument::parse(&read_input(ctx)?)?)
}

fn use_stored_flows(ctx: &Ctx) -> Result<bool, Failure> {
    match ctx.kv.get("flows").unwrap_or("optimal") {
        "optimal" => Ok(false),
        "stored" => Ok(true),
        other => Err(Error::Input(format!("flows={other}: use optimal or stored")).into()),
    }
}

fn f64_flows(doc: &GraphDocument<BigRational>) -> Vec<Flow<f64>> {
    doc.flows.iter().map(Flow::to_f64).collect()
}

fn report_text<T: Scalar + std::fmt::Display>(rep: &ComplexityReport<T>, show: impl Fn(&T) -> String) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "inputs = {} negative, {} positive", rep.negative.len(), rep.positive.len());
    let _ = writeln!(s, "negative complexity = {}", show(&rep.negative_max));
    let _ = writeln!(s, "positive complexity = {}", show(&rep.positive_max));
    let _ = writeln!(s, "complexity = {:?}", rep.total());
    if let Some(x) = rep.worst_negative() {
        let _ = writeln!(s, "worst negative = {x}");
    }
    if let Some(x) = rep.worst_positive() {
        let _ = writeln!(s, "worst positive = {x}");
    }
    s
}

fn complexity_text(ctx: &Ctx, doc: &GraphDocument<BigRational>) -> Result<String, Failure> {
    let domain = doc.domain(ctx.global.cap_inputs)?;
    let stored = use_stored_flows(ctx)?;
    let g = &doc.graph;
    if ctx.global.exact {
        let w = ExactWeights(&doc.weights);
        let rep = if stored {
            complexity_with_flows(g, &w, &domain, &doc.flows, 0.0)?
        } else {
            complexity_and_flows_exact(g, &w, &domain)?.0
        };
        let mut s = report_text(&rep, |v: &BigRational| v.to_string());
        let _ = writeln!(s, "complexity squared = {}", rep.total_squared());
        Ok(s)
    } else {
        let rep = if stored {
            complexity_with_flows(g, &doc.weights, &domain, &f64_flows(doc), ctx.global.tolerance)?
        } else {
            complexity_and_flows(g, &doc.weights, &domain)?.0
        };
        Ok(report_text(&rep, |v: &f64| format!("{v:?}")))
    }
}

pub fn complexity(ctx: &Ctx) -> Outcome {
    ctx.kv.reject_unknown(&["flows"])?;
    let doc = load_graph(ctx)?;
    print!("{}", complexity_text(ctx, &doc)?);
    Ok(())
}

/// Float certificate plus the complexity computed from the same flows.
fn certificate_f64(ctx: &Ctx, doc: &GraphDocument<BigRational>) -> Result<(CertificateBundle<f64>, f64), Failure> {
    let domain = doc.domain(ctx.global.cap_inputs)?;
    let (rep, flows) = if use_stored_flows(ctx)? {
        let flows = f64_flows(doc);
        let rep = complexity_with_flows(&doc.graph, &doc.weights, &domain, &flows, ctx.global.tolerance)?;
        (rep, flows)
    } else {
        complexity_and_flows(&doc.graph, &doc.weights, &domain)?
    };
    let bundle = build_certificate(&doc.graph, &doc.weights, &flows, &domain)?;
    Ok((bundle, rep.total()))
}

fn certificate_exact(
    ctx: &Ctx,
    doc: &GraphDocument<BigRational>,
) -> Result<(CertificateBundle<Surd>, BigRational), Failure> {
    let domain = doc.domain(ctx.global.cap_inputs)?;
    let w = ExactWeights(&doc.weights);
    let (rep, flows) = if use_stored_flows(ctx)? {
        let rep = complexity_with_flows(&doc.graph, &w, &domain, &doc.flows, 0.0)?;
        (rep, doc.flows.clone())
    } else {
        complexity_and_flows_exact(&doc.graph, &w, &domain)?
    };
    let bundle = build_certificate_exact(&doc.graph, &w, &flows, &domain)?;
    Ok((bundle, rep.total_squared()))
}

pub fn certify(ctx: &Ctx) -> Outcome {
    ctx.kv.reject_unknown(&["flows"])?;
    let out = output_path(ctx)?;
    let doc = load_graph(ctx)?;
    let mut buf = Vec::new();
    if ctx.global.exact {
        let (bundle, c2) = certificate_exact(ctx, &doc)?;
        write_certificate(&bundle, &mut buf)?;
        let obj2 = bundle.objective_squared();
        println!("objective squared = {obj2}");
        println!("complexity squared = {c2}");
        println!("objective = {:?}", obj2.to_f64().unwrap_or(f64::NAN).sqrt());
        if obj2 != c2 {
            return Err(Failure::Check("objective and complexity differ".into()));
        }
    } else {
        let (bundle, c) = certificate_f64(ctx, &doc)?;
        write_certificate(&bundle, &mut buf)?;
        let obj = objective_value(&bundle);
        println!("objective = {obj:?}");
        println!("complexity = {c:?}");
        println!("difference = {:e}", (obj - c).abs());
        if (obj - c).abs() > ctx.global.tolerance * c.max(1.0) {
            return Err(Failure::Check(format!("objective {obj} differs from complexity {c}")));
        }
    }
    write_artifact(ctx, out, &buf)?;
    Ok(())
}

fn is_graph_file(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.starts_with("lg "))
}

pub fn verify(ctx: &Ctx) -> Outcome {
    ctx.kv.reject_unknown(&["flows"])?;
    let text = read_input(ctx)?;
    let cap = ctx.global.cap_inputs;
    let rows_wanted = ctx.out.is_some();
    if ctx.global.exact {
        let bundle: CertificateBundle<Surd> = if is_graph_file(&text) {
            certificate_exact(ctx, &GraphDocument::parse(&text)?)?.0
        } else {
            parse_certificate(&text)?
        };
        let rep = verify_feasibility_exact(&bundle, cap)?;
        println!("pairs = {}", rep.pairs);
        println!("inexact pairs = {}", rep.failures);
        println!("max deviation = {:e}", rep.max_deviation);
        if rows_wanted {
            let f = verify_feasibility(&bundle.to_f64(), cap, true)?;
            write_rows(ctx, &f.rows)?;
        }
        if let Some((x, y, sum)) = &rep.first_failure {
            return Err(Failure::Check(format!("pair ({x}) / ({y}) sums to {sum}, not 1")));
        }
    } else {
        let bundle: CertificateBundle<f64> = if is_graph_file(&text) {
            certificate_f64(ctx, &GraphDocument::parse(&text)?)?.0
        } else {
            parse_certificate(&text)?
        };
        let rep = verify_feasibility(&bundle, cap, rows_wanted)?;
        println!("pairs = {}", rep.pairs);
        println!("max deviation = {:e}", rep.max_deviation);
        if let Some((x, y)) = &rep.worst_pair {
            println!("worst pair = ({x}) / ({y})");
        }
        if rows_wanted {
            write_rows(ctx, &rep.rows)?;
        }
        if !rep.is_feasible(ctx.global.tolerance) {
            return Err(Failure::Check(format!(
                "max deviation {:e} exceeds tolerance {:e}",
                rep.max_deviation, ctx.global.tolerance
            )));
        }
    }
    Ok(())
}

fn write_rows(ctx: &Ctx, rows: &[learning_graph::certificate::PairRow]) -> Outcome {
    let mut buf = Vec::new();
    write_pair_csv(rows, &mut buf)?;
    write_artifact(ctx, output_path(ctx)?, &buf)
}

pub fn scaling(ctx: &Ctx) -> Outcome {
    ctx.kv
        .reject_unknown(&["construction", "k", "grid", "from", "to", "detail", "l"])?;
    let construction = match ctx.kv.get("construction").unwrap_or("alg1") {
        "baseline" => Construction::Baseline,
        "alg1" | "staged" => Construction::Alg1Collapsed,
        other => return Err(Error::Input(format!("unknown construction {other:?}")).into()),
    };
    let k = ctx.kv.number("k")?.unwrap_or(3usize);
    if let Some(n) = ctx.kv.number::<usize>("detail")? {
        let params = StageParams::from_exponents(k, n)?;
        let p = match ctx.kv.get("l") {
            Some(_) => Some(promise(ctx)?),
            None => None,
        };
        let schedule = match &p {
            Some(p) => Schedule::new(params, p)?,
            None => Schedule::uncapped(params),
        };
        let rep = collapsed_estimate(&schedule, p.as_ref(), 1_000_000)?;
        let mut buf = Vec::new();
        rep.write_csv(&mut buf)?;
        match &ctx.out {
            Some(path) => write_artifact(ctx, path, &buf)?,
            None => print!("{}", String::from_utf8_lossy(&buf)),
        }
        println!("estimate = {:?}", rep.estimate);
        return Ok(());
    }
    let grid: Vec<usize> = match ctx.kv.list::<usize>("grid")? {
        Some(g) => g,
        None => {
            let from = ctx.kv.number("from")?.unwrap_or(6u32);
            let to = ctx.kv.number("to")?.unwrap_or(14u32);
            if from > to || to >= 40 {
                return Err(Error::Input(format!("need from <= to < 40, got {from}..{to}")).into());
            }
            (from..=to).map(|e| 1usize << e).collect()
        }
    };
    let fit = scaling_experiment(construction, k, &grid)?;
    let target = match construction {
        Construction::Baseline => BigRational::new(k.into(), (k + 1).into()),
        Construction::Alg1Collapsed => rho_exponents(k)?[1].clone(),
    };
    println!("slope = {:.6}", fit.slope);
    println!("intercept = {:.6}", fit.intercept);
    println!("target exponent = {target} ({:.6})", target.to_f64().unwrap_or(f64::NAN));
    for w in &fit.warnings {
        println!("warning: {w}");
    }
    let mut csv = String::from("n,estimate,residual\n");
    for ((n, e), r) in fit.points.iter().zip(&fit.residuals) {
        let _ = writeln!(csv, "{n},{e},{r}");
    }
    match &ctx.out {
        Some(path) => write_artifact(ctx, path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn print_tail(rep: &TailReport) {
    println!("lambda\tempirical\tbound\tstderr");
    for r in &rep.rows {
        let bound = r.bound.map(|b| format!("{b:.6e}")).unwrap_or_else(|| "-".into());
        println!("{}\t{:.6e}\t{bound}\t{:.3e}", r.lambda, r.empirical, r.stderr);
    }
    match (rep.fitted_rate, rep.r_squared) {
        (Some(a), Some(r2)) => println!("fitted rate = {a:.4} (r^2 = {r2:.4}, scale {})", rep.scale),
        _ => println!("fitted rate = none (too few nonzero tail points)"),
    }
    println!("monotone = {}", rep.is_monotone());
    let low = rep.low_confidence();
    if !low.is_empty() {
        println!("low confidence at lambda = {}", join(&low));
    }
}

fn write_tail(ctx: &Ctx, rep: &TailReport, title: &str) -> Outcome {
    let Some(path) = &ctx.out else { return Ok(()) };
    let mut buf = Vec::new();
    rep.write_csv(&mut buf)?;
    write_artifact(ctx, path, &buf)?;
    let mut script_path = PathBuf::from(path);
    script_path.set_extension("gp");
    let script = rep.gnuplot_script(&path.display().to_string(), title);
    write_artifact(ctx, &script_path, script.as_bytes())
}

pub fn mc_tail(ctx: &Ctx) -> Outcome {
    ctx.kv.reject_unknown(&["kind", "m", "k", "l", "spec", "r", "lambdas"])?;
    let cfg = sampler(ctx)?;
    let grid = ctx.kv.list::<f64>("lambdas")?;
    match ctx.kv.get("kind").unwrap_or("azuma") {
        "azuma" => {
            let m = ctx.kv.number("m")?.unwrap_or(100usize);
            let rep = martingale_tail_check(m, cfg, &grid.unwrap_or_else(default_lambda_grid))?;
            print_tail(&rep);
            write_tail(ctx, &rep, &format!("+-1 walk, m = {m}"))?;
            let bad = rep.violations(3.0);
            if !bad.is_empty() {
                return Err(Failure::Check(format!(
                    "empirical tail above the bound by more than 3 standard errors at lambda = {}",
                    join(&bad.iter().map(|r| r.lambda).collect::<Vec<_>>())
                )));
            }
        }
        "type" => {
            let p = promise(ctx)?;
            let spec = match specification(ctx, p.k)? {
                Some(s) => s,
                None => modal_spec(&p, ctx.kv.require("r")?)?,
            };
            let grid = grid.unwrap_or_else(|| {
                let top = (spec.size() as f64).sqrt() * 1.5;
                (0..=16).map(|i| top * i as f64 / 16.0).collect()
            });
            let rep = type_deviation_tail(&p, &spec, cfg, &grid)?;
            println!("specification = {spec}");
            print_tail(&rep);
            write_tail(ctx, &rep, &format!("type deviation, spec {spec}"))?;
        }
        other => return Err(Error::Input(format!("kind={other}: use azuma or type")).into()),
    }
    Ok(())
}

pub fn flow_ratio(ctx: &Ctx) -> Outcome {
    ctx.kv.reject_unknown(&["k", "n", "l", "r"])?;
    let p = promise(ctx)?;
    let n: usize = ctx.kv.require("n")?;
    let params = match ctx.kv.list::<usize>("r")? {
        Some(r) => StageParams::new(p.k, n, r)?,
        None => StageParams::from_exponents(p.k, n)?,
    };
    for w in params.asymptotic_warnings() {
        println!("warning: {w}");
    }
    let scale = params.r(2.min(p.k - 1)) as f64 / n as f64;
    let schedule = Schedule::new(params, &p)?;
    let rep = key_flow_ratio_check(&schedule, &p, sampler(ctx)?)?;
    println!("rounds = {}", rep.rounds);
    println!("samples = {}", rep.samples);
    println!("distinct types = {}", rep.distinct_types);
    println!("pairs = {}", rep.pairs);
    println!("d\tmax |log ratio|\tper unit of d r_2/n");
    for (d, v) in &rep.max_log_ratio {
        let per = if *d > 0 { v / (*d as f64 * scale) } else { 0.0 };
        println!("{d}\t{v:.6}\t{per:.4}");
    }
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "none".into());
    println!("fitted c = {}", opt(rep.fitted_c));
    println!("growth exponent = {}", opt(rep.growth_exponent));
    println!("typical band = {}", opt(rep.typical_band));
    println!("same-type mismatch = {}", rep.same_type_mismatch);
    if rep.insufficient_data() {
        println!("insufficient data: too few same-specification pairs");
    }
    if rep.same_type_mismatch {
        return Err(Failure::Check("two samples of one type carried different flows".into()));
    }
    Ok(())
}

pub fn symmetrize(ctx: &Ctx) -> Outcome {
    ctx.kv.reject_unknown(&["group", "size", "flows"])?;
    let out = output_path(ctx)?;
    let doc = load_graph(ctx)?;
    let domain = doc.domain(ctx.global.cap_inputs)?;
    let f = domain.spec();
    let mode = match ctx.kv.get("group").unwrap_or("full") {
        "full" => GroupMode::Full {
            cap: ctx.global.cap_inputs,
        },
        "sampled" => GroupMode::Sampled {
            size: ctx.kv.require("size")?,
            seed: ctx.global.seed,
        },
        other => return Err(Error::Input(format!("group={other}: use full or sampled")).into()),
    };
    let group = group_elements(f.n(), f.m(), mode)?;
    let stored = use_stored_flows(ctx)? || ctx.kv.get("flows").is_none() && !doc.flows.is_empty();
    let g = &doc.graph;
    let text = if ctx.global.exact {
        let w = ExactWeights(&doc.weights);
        let flows = if stored {
            doc.flows.clone()
        } else {
            complexity_and_flows_exact(g, &w, &domain)?.1
        };
        let before = complexity_with_flows(g, &w, &domain, &flows, 0.0)?;
        let (table, new_flows) = group_average(g, &w, &flows, &domain, &group)?;
        let after = complexity_with_flows(g, &table, &domain, &new_flows, 0.0)?;
        println!("group elements = {}", group.len());
        println!("complexity squared before = {}", before.total_squared());
        println!("complexity squared after = {}", after.total_squared());
        if after.total_squared() > before.total_squared() {
            return Err(Failure::Check("symmetrization increased the complexity".into()));
        }
        output_doc(&doc, table.map(|v| v.to_f64().unwrap_or(f64::NAN)), new_flows)?
    } else {
        let flows = if stored {
            f64_flows(&doc)
        } else {
            complexity_and_flows(g, &doc.weights, &domain)?.1
        };
        let tol = ctx.global.tolerance;
        let before = complexity_with_flows(g, &doc.weights, &domain, &flows, tol)?;
        let (table, new_flows) = group_average(g, &doc.weights, &flows, &domain, &group)?;
        let after = complexity_with_flows(g, &table, &domain, &new_flows, tol)?;
        println!("group elements = {}", group.len());
        println!("complexity before = {:?}", before.total());
        println!("complexity after = {:?}", after.total());
        if after.total() > before.total() * (1.0 + tol) {
            return Err(Failure::Check("symmetrization increased the complexity".into()));
        }
        output_doc(&doc, table, new_flows)?
    };
    write_artifact(ctx, out, text.as_bytes())
}

fn output_doc<T: TextValue + num::Zero>(
    doc: &GraphDocument<BigRational>,
    weights: WeightTable<f64>,
    flows: Vec<Flow<T>>,
) -> Result<String, Failure> {
    let out = GraphDocument {
        graph: doc.graph.clone(),
        function: doc.function.clone(),
        weights,
        inputs: doc.inputs.clone(),
        flows,
    };
    Ok(out.to_text()?)
}
