//! One pass/fail line per acceptance criterion.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use fqdist::cli::{
    run, snapshot_certificate, Command, DistanceSpec, ExperimentConfig, Geometry, OutputFormat, PathColors, RandomPair,
    SetSource, TreeHost,
};
use fqdist::constructions::{
    construct_avoiding, construct_ikr, construct_saturating, verify_construction, ConstructionKind,
};
use fqdist::dfs_path::{embed_path, incidence_certificate, embed_path_observed, validate_state, verify_embedding, ColoredPath, PathOutcome};
use fqdist::distgraph::{multisets_agree, spectrum_character, spectrum_dense, verify_ndl, MULTISET_TOL};
use fqdist::expander::{mixing_check, peel, random_subset, star_peel, ColoredFamily, VertexSet};
use fqdist::gf::{form_value_distribution, norm_form, quadratic_form_q, select_mu};
use fqdist::haxell::{
    embed_all, enumerate_colored_trees_with, residual_r, verify_tree_embedding, ColorSymmetry, ColoredTree,
    GoodnessParams, PartialEmbedding, Strategy, TreeOutcome,
};
use fqdist::incidence::{bound_check_general, count_incidences, CountStrategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{all_distances, colored, space, synthetic_hosts};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(err: fqdist::Error) -> String {
    err.to_string()
}

fn spectrum_audit() -> Outcome {
    let mut graphs = 0;
    for q in [3u64, 5, 7, 9] {
        for d in [2usize, 3] {
            let fam = all_distances(q, d);
            let results: Vec<Result<(), String>> = (0..fam.t())
                .into_par_iter()
                .map(|c| {
                    let spec = spectrum_character(&fam, c).map_err(e)?;
                    let ndl = verify_ndl(&fam, c, &spec.certificate).map_err(e)?;
                    let dense = spectrum_dense(&fam, c).map_err(e)?;
                    let r = fam.radii()[c].index();
                    ensure(ndl.lambda_ok, || format!("q={q} d={d} r={r}: λ = {} > {}", ndl.lambda, ndl.bound))?;
                    ensure(ndl.deviation_ok, || {
                        format!("q={q} d={d} r={r}: D - q^(d-1) = {} not ±{}", ndl.degree_deviation, ndl.expected_deviation)
                    })?;
                    ensure(multisets_agree(&dense, &spec.eigenvalues, MULTISET_TOL), || {
                        format!("q={q} d={d} r={r}: dense and character spectra differ")
                    })
                })
                .collect();
            for r in results {
                r?;
                graphs += 1;
            }
        }
    }
    Ok(format!("{graphs} distance graphs"))
}

fn mixing_audit() -> Outcome {
    let mut checks = 0usize;
    for q in [3u64, 5, 7, 9] {
        for d in [2usize, 3] {
            let fam = ColoredFamily::from_distance(all_distances(q, d)).map_err(e)?;
            let n = fam.len();
            for c in 0..fam.t() {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 * q + d as u64);
                rng.set_stream(c as u64);
                let pairs: Vec<(VertexSet, VertexSet)> = (0..1000)
                    .map(|_| {
                        let (a, b) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
                        (random_subset(n, a, &mut rng).unwrap(), random_subset(n, b, &mut rng).unwrap())
                    })
                    .collect();
                let failures = pairs
                    .par_iter()
                    .map(|(x, y)| mixing_check(&fam, c, x, y).map(|m| !m.pass as usize))
                    .sum::<Result<usize, _>>()
                    .map_err(e)?;
                ensure(failures == 0, || format!("q={q} d={d} color={c}: {failures} failures"))?;
                checks += pairs.len();
            }
        }
    }
    Ok(format!("{checks} pairs, zero failures"))
}

fn peel_case(fam: &ColoredFamily, c: f64, seeds: std::ops::Range<u64>, label: &str) -> Result<usize, String> {
    let (n, degree, lambda) = fam.common_parameters().map_err(e)?;
    let want = (c * n as f64 * lambda / degree as f64).ceil() as usize;
    ensure(want <= n as usize, || format!("{label}: |S| = {want} exceeds n = {n}"))?;
    for seed in seeds.clone() {
        let s = random_subset(fam.len(), want, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(e)?;
        let rep = peel(fam, &s, c).map_err(e)?;
        ensure(rep.lemma_applies, || format!("{label}: hypotheses unmet at seed {seed}"))?;
        ensure(rep.removals.len() as f64 <= rep.bound, || {
            format!("{label} seed {seed}: {} removals > {}", rep.removals.len(), rep.bound)
        })?;
        for (color, m) in rep.min_survivor_degree.iter().enumerate() {
            if let Some(m) = m {
                ensure(*m as f64 >= rep.tau, || format!("{label} seed {seed}: color {color} min degree {m} < {}", rep.tau))?;
            }
        }
    }
    Ok(want)
}

fn peel_audit() -> Outcome {
    let single = colored(9, 3, &[1]);
    let a = peel_case(&single, 4.0, 0..20, "q=9 t=1")?;
    let multi = colored(13, 3, &[1, 2]);
    let b = peel_case(&multi, 6.0, 0..20, "q=13 t=2")?;
    Ok(format!("|S| = {a} at q=9 and {b} at q=13, 20 seeds each"))
}

fn star_audit() -> Outcome {
    let fam = colored(13, 3, &[1]);
    let mut worst = usize::MAX;
    for seed in 0..10 {
        let s = random_subset(fam.len(), 2100, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(e)?;
        let (_, st) = star_peel(&fam, &s).map_err(e)?;
        ensure(st.applies == Some(true), || "size hypothesis unmet".into())?;
        ensure(st.pass == Some(true), || format!("seed {seed}: {st:?}"))?;
        worst = worst.min(st.w_size);
    }
    Ok(format!("smallest W = {worst}, 10 seeds"))
}

fn path_audit() -> Outcome {
    let fam = colored(9, 3, &[1]);
    let (n, degree, lambda) = fam.common_parameters().map_err(e)?;
    let full = VertexSet::full(fam.len());
    let measured = n as usize - (2.0 * n as f64 * lambda / degree as f64).ceil() as usize;
    for len in [405, measured] {
        let path = ColoredPath::cyclic(len, 1).map_err(e)?;
        match embed_path(&fam, &full, &path).map_err(e)? {
            PathOutcome::Embedded(v) => verify_embedding(&fam, &path, &v).map_err(e)?,
            PathOutcome::Failed(f) => return Err(format!("q=9 ℓ={len} failed: {f:?}")),
        }
    }
    let fam2 = colored(13, 3, &[1, 2]);
    let (n2, d2, l2) = fam2.common_parameters().map_err(e)?;
    let len2 = (n2 as f64 - 2.0 * 2f64.sqrt() * n2 as f64 * l2 / d2 as f64).ceil() as usize;
    let path2 = ColoredPath::cyclic(len2, 2).map_err(e)?;
    match embed_path(&fam2, &VertexSet::full(fam2.len()), &path2).map_err(e)? {
        PathOutcome::Embedded(v) => verify_embedding(&fam2, &path2, &v).map_err(e)?,
        PathOutcome::Failed(f) => return Err(format!("q=13 ℓ={len2} failed: {f:?}")),
    }
    let mut steps = 0u64;
    for d in [2usize, 3] {
        let dist = all_distances(3, d);
        let radii: Vec<u64> = dist.radii().iter().map(|r| r.index() as u64).collect();
        let mut families = vec![ColoredFamily::from_distance(dist).map_err(e)?];
        families.extend(radii.iter().map(|&r| colored(3, d, &[r])));
        for fam in &families {
            let s = VertexSet::full(fam.len());
            let path = ColoredPath::cyclic(fam.len(), fam.t()).map_err(e)?;
            embed_path_observed(fam, &s, &path, |st| {
                steps += 1;
                validate_state(st, fam, &s, &path)
            })
            .map_err(e)?;
        }
    }
    Ok(format!("ℓ = 405 and {measured} at q=9, ℓ = {len2} at q=13, {steps} validated steps at q=3"))
}

fn incidence_certificate_audit() -> Outcome {
    let mut lines = Vec::new();
    for d in [2usize, 3] {
        let fam = ColoredFamily::from_distance(all_distances(5, d)).map_err(e)?;
        let s = VertexSet::full(fam.len());
        let path = ColoredPath::cyclic(fam.len(), fam.t()).map_err(e)?;
        let threshold = 5f64.powf((d as f64 + 2.0) / 2.0);
        let cert = snapshot_certificate(&fam, &s, &path, threshold)
            .map_err(e)?
            .ok_or_else(|| format!("d={d}: |A| never dropped below {}", 1.0 + threshold))?;
        ensure(cert.incidences == 0, || format!("d={d}: I(A, C) = {}", cert.incidences))?;
        ensure(cert.b_total as f64 <= threshold, || format!("d={d}: Σ|B_r| = {} > {threshold}", cert.b_total))?;
        ensure(cert.pass, || format!("d={d}: {cert:?}"))?;
        lines.push(format!("d={d}: |A| = {}, Σ|B_r| = {}", cert.a_size, cert.b_total));
    }
    let fam = ColoredFamily::from_distance(all_distances(5, 3)).map_err(e)?;
    let threshold = 5f64.powf(2.5);
    let mut largest_b = 0;
    for seed in 0..10 {
        let s = random_subset(fam.len(), 90, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(e)?;
        let path = ColoredPath::cyclic(s.len(), fam.t()).map_err(e)?;
        let mut worst = Ok(());
        embed_path_observed(&fam, &s, &path, |st| {
            let cert = incidence_certificate(st, &fam)?;
            largest_b = largest_b.max(cert.b_total);
            if worst.is_ok() && !cert.pass {
                worst = Err(format!("seed {seed}: {cert:?}"));
            }
            Ok(())
        })
        .map_err(e)?;
        worst?;
    }
    lines.push(format!("random |S| = 90 at d=3, every step certified, largest Σ|B_r| = {largest_b} (threshold {threshold:.1})"));
    Ok(lines.join("; "))
}

fn subsets_up_to(universe: &[(u32, usize)], size: usize) -> Vec<Vec<(u32, usize)>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![(Vec::new(), 0usize)];
    for _ in 0..size {
        let mut next = Vec::new();
        for (set, start) in frontier {
            for i in start..universe.len() {
                let mut s: Vec<(u32, usize)> = set.clone();
                s.push(universe[i]);
                out.push(s.clone());
                next.push((s, i + 1));
            }
        }
        frontier = next;
    }
    out
}

fn submodular(fam: &ColoredFamily, phi: &PartialEmbedding, delta: u32) -> Result<usize, String> {
    let universe: Vec<(u32, usize)> = (0..fam.len() as u32).flat_map(|v| (0..fam.t()).map(move |c| (v, c))).collect();
    let sets = subsets_up_to(&universe, 2);
    let values: Vec<i64> = sets.iter().map(|x| residual_r(fam, phi, delta, x)).collect::<Result<_, _>>().map_err(e)?;
    let checked = (0..sets.len())
        .into_par_iter()
        .map(|i| {
            let a: BTreeSet<_> = sets[i].iter().copied().collect();
            let mut count = 0;
            for j in i..sets.len() {
                let b: BTreeSet<_> = sets[j].iter().copied().collect();
                let union: Vec<_> = a.union(&b).copied().collect();
                let inter: Vec<_> = a.intersection(&b).copied().collect();
                let lhs = residual_r(fam, phi, delta, &union).map_err(e)? + residual_r(fam, phi, delta, &inter).map_err(e)?;
                ensure(lhs <= values[i] + values[j], || format!("R fails submodularity at {a:?}, {b:?}"))?;
                count += 1;
            }
            Ok(count)
        })
        .collect::<Result<Vec<usize>, String>>()?;
    Ok(checked.into_iter().sum())
}

fn phi_of(fam: &ColoredFamily, tree: &ColoredTree, map: &[u32]) -> Result<PartialEmbedding, String> {
    let mut phi = PartialEmbedding::empty(fam, tree.len());
    for (v, parent) in tree.bfs_order() {
        phi.place(fam, v, map[v as usize], parent).map_err(e)?;
    }
    Ok(phi)
}

fn haxell_audit() -> Outcome {
    const DELTA: u32 = 2;
    let hosts = synthetic_hosts(20, DELTA);
    let mut trees_embedded = 0usize;
    let mut pairs = 0usize;
    for h in &hosts {
        let k = h.hypotheses.k;
        let size = k.min(7);
        let trees: Vec<ColoredTree> = enumerate_colored_trees_with(size, h.t, ColorSymmetry::Labelled)
            .map_err(e)?
            .into_iter()
            .filter(|t| t.max_color_degrees().iter().all(|&x| x <= DELTA as usize))
            .collect();
        let params = GoodnessParams::new(DELTA, h.m, k).map_err(e)?;
        let outcomes = embed_all(&h.family, &trees, &params, Strategy::ExactGood).map_err(e)?;
        let mut witness = None;
        for (tree, out) in trees.iter().zip(&outcomes) {
            match out {
                TreeOutcome::Embedded(map) => {
                    verify_tree_embedding(&h.family, tree, map).map_err(e)?;
                    if witness.is_none() && tree.len() > 1 {
                        witness = Some(phi_of(&h.family, tree, map)?);
                    }
                }
                TreeOutcome::Failed { .. } => {
                    return Err(format!("seed {}: tree {:?} failed: {out:?}", h.seed, tree.edges()))
                }
            }
        }
        trees_embedded += trees.len();
        pairs += submodular(&h.family, &PartialEmbedding::empty(&h.family, 0), DELTA)?;
        if let Some(phi) = witness {
            pairs += submodular(&h.family, &phi, DELTA)?;
        }
    }
    let ks: Vec<usize> = hosts.iter().map(|h| h.hypotheses.k).collect();
    Ok(format!("{} hosts (k = {ks:?}), {trees_embedded} trees, {pairs} submodularity pairs", hosts.len()))
}

fn construction_audit() -> Outcome {
    let mut count = 0;
    for q in [3u64, 7] {
        for d in [3usize, 5] {
            let sp = space(q, d);
            let f = sp.field().clone();
            let mut outputs = Vec::new();
            for k in (1..).take_while(|k| 2 * k + 1 < d) {
                for r in f.nonzero_elements() {
                    outputs.push(construct_avoiding(&sp, k, r).map_err(e)?);
                }
            }
            for k in (1..).take_while(|k| 2 * k < d) {
                let mu = select_mu(d, &f).map_err(e)?;
                for r in f.nonzero_elements().filter(|&r| 2 * k + 1 < d || f.legendre(r) == f.legendre(mu)) {
                    outputs.push(construct_saturating(&sp, k, Some(r)).map_err(e)?);
                }
            }
            let (ikr, ikr_rep) = construct_ikr(&sp).map_err(e)?;
            ensure(ikr_rep.pass, || format!("q={q} d={d}: IKR counts {:?}", ikr_rep.counts))?;
            ensure(ikr_rep.x_size as u64 == q.pow((d as u32).div_ceil(2)), || format!("q={q} d={d}: |X| = {}", ikr_rep.x_size))?;
            outputs.push(ikr);
            for out in &outputs {
                let rep = verify_construction(&sp, out).map_err(e)?;
                let exact = match out.kind {
                    ConstructionKind::Avoiding => rep.s_r == 0 && rep.y_size as u64 == q.pow(out.slab_k as u32 + 1) - q.pow(out.slab_k as u32),
                    ConstructionKind::Saturating => rep.s_r == rep.product && rep.y_size as u64 == q.pow(out.slab_k as u32),
                    ConstructionKind::Ikr => rep.s_r == 0,
                };
                ensure(exact && rep.pass, || format!("q={q} d={d}: {rep:?}"))?;
            }
            count += outputs.len();
        }
    }
    Ok(format!("{count} instances exact"))
}

fn incidence_audit() -> Outcome {
    let mut count = 0;
    for q in [3u64, 5, 7] {
        for d in [2usize, 3] {
            let sp = space(q, d);
            let n = sp.size() as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(q * 10 + d as u64);
            let cases: Vec<RandomPair> = (0..500)
                .map(|_| RandomPair { x_size: rng.gen_range(1..=n), y_size: rng.gen_range(1..=n * q as usize), seed: rng.gen() })
                .collect();
            cases
                .par_iter()
                .map(|&rp| {
                    let (xs, ys) = fqdist::cli::random_incidence_instance(&sp, rp).map_err(e)?;
                    let pairs = count_incidences(&sp, &xs, &ys, CountStrategy::Pairs).map_err(e)?;
                    let walk = count_incidences(&sp, &xs, &ys, CountStrategy::SpherePoints).map_err(e)?;
                    ensure(pairs == walk, || format!("q={q} d={d} {rp}: {pairs} vs {walk}"))?;
                    let rep = bound_check_general(&sp, &xs, &ys, None).map_err(e)?;
                    ensure(rep.pass, || format!("q={q} d={d} {rp}: {} > {}", rep.lhs, rep.rhs))
                })
                .collect::<Result<Vec<()>, String>>()?;
            count += cases.len();
        }
    }
    Ok(format!("{count} random pairs"))
}

fn form_audit() -> Outcome {
    for q in [3u64, 5, 7] {
        for d in [3usize, 5] {
            let sp = space(q, d);
            let f = sp.field().clone();
            let mu = select_mu(d, &f).map_err(e)?;
            let norm = form_value_distribution(&sp, |x| norm_form(&f, x)).map_err(e)?;
            let qf = form_value_distribution(&sp, |x| quadratic_form_q(&f, x, mu).unwrap()).map_err(e)?;
            ensure(norm == qf, || format!("q={q} d={d}: {norm:?} vs {qf:?}"))?;
        }
    }
    Ok("6 (q, d) pairs equal".into())
}

fn batch() -> (tempfile::TempDir, Vec<ExperimentConfig>) {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    std::fs::write(&tree, r#"{"vertices": 4, "edges": [[0, 1, 0], [1, 2, 1], [1, 3, 0]]}"#).unwrap();
    let g = |q, d| Geometry { q, d };
    let json = |command| ExperimentConfig { command, format: OutputFormat::Json };
    let configs = vec![
        json(Command::Spectrum { geometry: g(7, 3), distances: DistanceSpec::All, eigenvalues: true }),
        json(Command::Mixing { geometry: g(5, 3), distances: DistanceSpec::All, trials: 200, seed: 3 }),
        json(Command::Peel {
            geometry: g(9, 3),
            distances: DistanceSpec::List(vec![1]),
            set: SetSource::Random { size: 300, seed: 5 },
            c: None,
            star: true,
        }),
        json(Command::EmbedPath {
            geometry: g(9, 3),
            distances: DistanceSpec::List(vec![1]),
            set: SetSource::Full,
            len: Some(405),
            colors: PathColors::Cyclic,
        }),
        json(Command::EmbedPath {
            geometry: g(5, 2),
            distances: DistanceSpec::All,
            set: SetSource::Full,
            len: None,
            colors: PathColors::Random(2),
        }),
        json(Command::EmbedTree {
            tree,
            host: TreeHost::Distance { geometry: g(5, 2), distances: DistanceSpec::List(vec![1, 2]), set: SetSource::Random { size: 20, seed: 1 } },
            strategy: Strategy::Backtrack,
            delta: 2,
            m: 1,
            k: None,
            s_cap: None,
        }),
        json(Command::Construct { geometry: g(7, 5), kind: ConstructionKind::Saturating, slab_k: Some(1), r: None }),
        json(Command::Incidence { geometry: g(5, 3), points: None, spheres: None, random: Some(RandomPair { x_size: 40, y_size: 200, seed: 9 }), exponent: None }),
        json(Command::ProbeConjecture { geometry: g(5, 3), set: SetSource::Random { size: 100, seed: 4 } }),
        ExperimentConfig {
            command: Command::Mixing { geometry: g(3, 3), distances: DistanceSpec::All, trials: 50, seed: 8 },
            format: OutputFormat::Csv,
        },
    ];
    (dir, configs)
}

fn render_batch(configs: &[ExperimentConfig], threads: usize) -> Result<Vec<String>, String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|x| x.to_string())?;
    pool.install(|| {
        fqdist::cli::run_batch(configs)
            .into_iter()
            .map(|r| r.and_then(|rep| rep.render()).map_err(e))
            .collect()
    })
}

fn determinism_audit() -> Outcome {
    let (_dir, configs) = batch();
    let first = render_batch(&configs, 4)?;
    let again = render_batch(&configs, 4)?;
    let serial = render_batch(&configs, 1)?;
    let sequential: Vec<String> = configs.iter().map(|c| run(c).and_then(|r| r.render()).map_err(e)).collect::<Result<_, _>>()?;
    for (i, text) in first.iter().enumerate() {
        ensure(text == &again[i] && text == &serial[i] && text == &sequential[i], || {
            format!("config {i} differs between runs")
        })?;
    }
    let bytes: usize = first.iter().map(String::len).sum();
    Ok(format!("{} reports, {bytes} bytes, identical across 4 runs", first.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("spectrum audit", spectrum_audit),
        ("mixing lemma", mixing_audit),
        ("min-degree peeling", peel_audit),
        ("star threshold", star_audit),
        ("dfs path", path_audit),
        ("incidence certificate", incidence_certificate_audit),
        ("colorful tree embedding", haxell_audit),
        ("constructions", construction_audit),
        ("incidence bound", incidence_audit),
        ("form equivalence", form_audit),
        ("determinism", determinism_audit),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|x| name.contains(x.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {:>2} {name}: {detail} ({:.1}s)", i + 1, start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
