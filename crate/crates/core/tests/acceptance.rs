//! Acceptance criteria; prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use colorcq::analysis::{compute_fc1ghd, is_free_connex_acyclic};
use colorcq::check::{random_instance, SchemaClass};
use colorcq::engine::{JoinPlan, OpCounter};
use colorcq::eval::rewrite_loops;
use colorcq::generate::{self, rng};
use colorcq::model::{validate_database, Value};
use colorcq::oracle::{brute_answers, brute_hom_count, is_stable_partition, naive_refine, same_partition};
use colorcq::refine::{encode_loops, is_stable, refine};
use colorcq::{arb2bin, bin2graph};
use colorcq::{ColorIndex, ConjunctiveQuery, Database, ExactCount, FastCount, IndexedDatabase, Route, Schema};

/// Delay bound constant: steps between outputs must stay within
/// `DELAY_K * (|free| + 1)`.
const DELAY_K: u64 = 64;
const RANDOM_PER_CLASS: usize = 1000;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {:.2}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
}

fn movie() -> Database {
    let schema = Schema::new([("P", 2), ("A", 2), ("M", 2), ("S", 2)]).unwrap();
    let raw = vec![
        ("P", vec![vec!["PS", "LM"], vec!["PS", "MM"]]),
        ("A", vec![vec!["LM", "PS"], vec!["MM", "PS"]]),
        ("M", vec![vec!["LM", "Dr.S"], vec!["MM", "Dr.S"]]),
        ("S", vec![vec!["LM", "18m"], vec!["MM", "34m"]]),
    ];
    validate_database(&schema, &raw).unwrap().0
}

fn movie_query(db: &Database) -> ConjunctiveQuery {
    ConjunctiveQuery::build(
        db.schema(),
        &["x", "y1"],
        &[("A", &["x", "y1"]), ("A", &["x", "y2"]), ("P", &["y2", "x"])],
    )
    .unwrap()
}

fn path_query(schema: &Schema) -> ConjunctiveQuery {
    ConjunctiveQuery::build(schema, &["x", "y", "z"], &[("E", &["x", "y"]), ("E", &["y", "z"])]).unwrap()
}

fn err(e: colorcq::Error) -> String {
    e.to_string()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let db = movie();
    let q = movie_query(&db);
    let idx = IndexedDatabase::build_with(&db, Route::Arbitrary).map_err(err)?;
    let ops = OpCounter::new();
    let answers: BTreeSet<String> = idx.eval_enum(&q).map_err(err)?.iter().map(|t| idx.render_tuple(t)).collect();
    let want: BTreeSet<String> = ["(LM,PS)", "(MM,PS)"].iter().map(|s| s.to_string()).collect();
    ensure(answers == want, || format!("enum gave {answers:?}"))?;
    let count: ExactCount = idx.eval_count(&q, &ops).map_err(err)?;
    ensure(count == ExactCount::from(2u32), || format!("count gave {count}"))?;
    ensure(idx.eval_bool(&q.boolean_closure(), &ops).map_err(err)?, || "bool gave no".into())?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("enum/count/bool exact on the arbitrary-schema route, {:.0} ms", start.elapsed().as_secs_f64() * 1e3))
}

/// Results of the sweep over random instances shared by criteria 2, 6 and 9.
struct Sweep {
    instances: usize,
    elapsed: Duration,
    mismatch: Option<String>,
    max_delay_ratio: f64,
    delay_violation: Option<String>,
    dp_checks: usize,
    dp_mismatch: Option<String>,
}

/// All steps between consecutive outputs of an enumeration, including the
/// final exhausted call.
fn delays(idx: &IndexedDatabase, q: &ConjunctiveQuery) -> Result<(Vec<Vec<Value>>, Vec<u64>), colorcq::Error> {
    let ops = OpCounter::new();
    let p = idx.prepare(q, &ops)?;
    let steps = OpCounter::new();
    let mut it = p.enumerate(&steps);
    let mut out = Vec::new();
    let mut ds = Vec::new();
    loop {
        let before = steps.get();
        let next = it.next();
        ds.push(steps.get() - before);
        match next {
            Some(t) => out.push(t),
            None => break,
        }
    }
    Ok((out, ds))
}

fn sweep() -> Sweep {
    let start = Instant::now();
    let mut s = Sweep {
        instances: 0,
        elapsed: Duration::ZERO,
        mismatch: None,
        max_delay_ratio: 0.0,
        delay_violation: None,
        dp_checks: 0,
        dp_mismatch: None,
    };
    for (ci, class) in SchemaClass::ALL.into_iter().enumerate() {
        let mut r = rng(1000 + ci as u64);
        for i in 0..RANDOM_PER_CLASS {
            let (db, q) = random_instance(class, &mut r);
            s.instances += 1;
            let tag = |m: String| format!("{class:?} #{i}: {m} on {}", q.display(db.schema()));
            let result = (|| -> Result<(), String> {
                let idx = IndexedDatabase::build(&db).map_err(err)?;
                let oracle = brute_answers(&q, &db).map_err(err)?;
                let ops = OpCounter::new();
                let oset = oracle.answers.clone().into_tuples();

                // criterion 2
                let b = idx.eval_bool(&q, &ops).map_err(err)?;
                if b != !oset.is_empty() && s.mismatch.is_none() {
                    s.mismatch = Some(tag(format!("bool {b}")));
                }
                let c: ExactCount = idx.eval_count(&q, &ops).map_err(err)?;
                if c != ExactCount::from(oset.len()) && s.mismatch.is_none() {
                    s.mismatch = Some(tag(format!("count {c}, oracle {}", oset.len())));
                }
                let (answers, ds) = delays(&idx, &q).map_err(err)?;
                let aset: BTreeSet<Vec<Value>> = answers.iter().cloned().collect();
                if (aset.len() != answers.len() || aset != oset) && s.mismatch.is_none() {
                    s.mismatch = Some(tag(format!("enum gave {} tuples, {} distinct", answers.len(), aset.len())));
                }

                // criterion 6
                let bound = (q.head().len() + 1) as u64;
                let worst = ds.iter().copied().max().unwrap_or(0);
                s.max_delay_ratio = s.max_delay_ratio.max(worst as f64 / bound as f64);
                if worst > DELAY_K * bound && s.delay_violation.is_none() {
                    s.delay_violation = Some(tag(format!("delay {worst}")));
                }

                // criterion 9
                s.dp_checks += 1;
                let fast: FastCount = idx.eval_count(&q, &ops).map_err(err)?;
                if ExactCount::from(fast) != c {
                    s.dp_mismatch.get_or_insert_with(|| tag(format!("u64 count {fast} vs {c}")));
                }
                if q.is_full() {
                    let homs = if idx.route() == Route::Direct {
                        let ql = rewrite_loops(idx.index(), &q).map_err(err)?;
                        let dl = idx.index().loops().to_database();
                        brute_hom_count(&ql, &dl).map_err(err)?
                    } else {
                        oracle.hom_count.expect("full query")
                    };
                    if c != ExactCount::from(homs) {
                        s.dp_mismatch.get_or_insert_with(|| tag(format!("full count {c} vs {homs} homomorphisms")));
                    }
                } else if c != ExactCount::from(aset.len()) {
                    s.dp_mismatch.get_or_insert_with(|| tag(format!("count {c} vs {} enumerated", aset.len())));
                }
                Ok(())
            })();
            if let Err(m) = result {
                s.mismatch.get_or_insert_with(|| tag(m));
            }
        }
    }
    s.elapsed = start.elapsed();
    s
}

fn criterion_2(s: &Sweep) -> Outcome {
    if let Some(m) = &s.mismatch {
        return Err(m.clone());
    }
    ensure(s.elapsed < Duration::from_secs(300), || format!("took {:.1}s", s.elapsed.as_secs_f64()))?;
    Ok(format!(
        "{} instances over graph/binary/ternary schemas, {:.1}s",
        s.instances,
        s.elapsed.as_secs_f64()
    ))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut r = rng(3);
    let mut merges = 0usize;
    for i in 0..500 {
        use rand::Rng;
        let n = r.gen_range(1..=12);
        let p = r.gen_range(0.05..0.8);
        let labels = r.gen_range(0..=2);
        let db = generate::random_graph(n, p, 0.2, labels, r.gen());
        let g = encode_loops(&db).map_err(err)?.graph;
        let col = refine(&g);
        let naive = naive_refine(&g);
        ensure(same_partition(col.colors(), &naive), || format!("sample {i}: partitions differ"))?;
        ensure(is_stable(&g, col.colors()), || format!("sample {i}: refine output not stable"))?;
        ensure(is_stable_partition(&g, col.colors()), || format!("sample {i}: oracle finds instability"))?;
        let k = col.num_colors() as u32;
        for a in 0..k {
            for b in a + 1..k {
                let merged: Vec<u32> = col.colors().iter().map(|&c| if c == b { a } else { c }).collect();
                merges += 1;
                ensure(!is_stable_partition(&g, &merged), || {
                    format!("sample {i}: merging colors {a} and {b} stays stable")
                })?;
            }
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("500 graphs, {merges} merges all unstable"))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    for n in [10, 100, 1000] {
        let k = ColorIndex::build(&generate::cycle(n)).map_err(err)?.num_colors();
        ensure(k == 1, || format!("C_{n} has {k} colors"))?;
    }
    for h in 4..=12 {
        let k = ColorIndex::build(&generate::binary_tree(h)).map_err(err)?.num_colors();
        ensure(k == h as usize + 1, || format!("tree of height {h} has {k} colors"))?;
    }
    within(start, Duration::from_secs(30))?;
    Ok("cycles 1 color, trees h+1 colors".into())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut indexed = Vec::new();
    let mut baseline = Vec::new();
    for n in [1_000, 10_000, 100_000] {
        let db = generate::cycle(n);
        let q = path_query(db.schema());
        let idx = IndexedDatabase::build(&db).map_err(err)?;
        let ops = OpCounter::new();
        let prep = idx.prepare(&q, &ops).map_err(err)?;
        indexed.push(ops.get());
        let count: ExactCount = prep.count(&OpCounter::new());
        ensure(count == ExactCount::from(4 * n), || format!("C_{n}: count {count}"))?;
        let bops = OpCounter::new();
        JoinPlan::preprocess(&q, &db, &bops).map_err(err)?;
        baseline.push(bops.get());
    }
    let (imin, imax) = (*indexed.iter().min().unwrap(), *indexed.iter().max().unwrap());
    ensure(imax <= 2 * imin, || format!("indexed ops {indexed:?}"))?;
    ensure(baseline[2] >= 50 * baseline[0], || format!("baseline ops {baseline:?}"))?;
    within(start, Duration::from_secs(120))?;
    Ok(format!("indexed ops {indexed:?}, baseline ops {baseline:?}"))
}

fn criterion_6(s: &Sweep) -> Outcome {
    if let Some(m) = &s.delay_violation {
        return Err(m.clone());
    }
    let start = Instant::now();
    let mut worst: Vec<f64> = Vec::new();
    // fixed queries, database grown tenfold
    for (small, large) in [(40, 400), (60, 600)] {
        let mut ratios = Vec::new();
        for n in [small, large] {
            let db = generate::random_graph(n, 3.0 / n as f64, 0.1, 1, n as u64);
            let qs = [
                ConjunctiveQuery::build(db.schema(), &["x", "y", "z"], &[("E", &["x", "y"]), ("E", &["y", "z"]), ("U0", &["z"])]),
                ConjunctiveQuery::build(db.schema(), &["x"], &[("E", &["x", "y"]), ("E", &["y", "z"])]),
                ConjunctiveQuery::build(db.schema(), &["y", "x"], &[("E", &["x", "y"]), ("E", &["y", "y"])]),
            ];
            let idx = IndexedDatabase::build(&db).map_err(err)?;
            let mut r: f64 = 0.0;
            for q in qs {
                let q = q.map_err(err)?;
                let (_, ds) = delays(&idx, &q).map_err(err)?;
                let bound = (q.head().len() + 1) as u64;
                let w = ds.into_iter().max().unwrap_or(0);
                ensure(w <= DELAY_K * bound, || format!("graph n={n}: delay {w}"))?;
                r = r.max(w as f64 / bound as f64);
            }
            ratios.push(r);
        }
        worst.extend(ratios);
    }
    for (n, m) in [(8usize, 20usize), (80, 200)] {
        let db = generate::random_database(&[3, 2], n, m, 17);
        let q = ConjunctiveQuery::build(db.schema(), &["x", "z"], &[("R0", &["x", "y", "z"]), ("R1", &["z", "w"])])
            .map_err(err)?;
        let idx = IndexedDatabase::build(&db).map_err(err)?;
        let (_, ds) = delays(&idx, &q).map_err(err)?;
        let w = ds.into_iter().max().unwrap_or(0);
        ensure(w <= DELAY_K * 3, || format!("ternary n={n}: delay {w}"))?;
        worst.push(w as f64 / 3.0);
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!(
        "K={DELAY_K} on K*(|free|+1); worst ratio {:.1} over random instances, {:?} under scaling",
        s.max_delay_ratio,
        worst.iter().map(|r| (r * 10.0).round() / 10.0).collect::<Vec<_>>()
    ))
}

fn check_decoded(
    decoded: Vec<Vec<Value>>,
    want: &BTreeSet<Vec<Value>>,
    what: &str,
) -> Result<(), String> {
    let n = decoded.len();
    let set: BTreeSet<Vec<Value>> = decoded.into_iter().collect();
    ensure(set.len() == n, || format!("{what}: decode not injective"))?;
    ensure(&set == want, || format!("{what}: decoded image differs from the oracle answers"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for (ci, class) in [SchemaClass::Binary, SchemaClass::Ternary].into_iter().enumerate() {
        let mut r = rng(7000 + ci as u64);
        for i in 0..150 {
            let (db, q) = random_instance(class, &mut r);
            let want = brute_answers(&q, &db).map_err(err)?.answers.into_tuples();
            let tag = |m: &str| format!("{class:?} #{i}: {m}");
            if db.schema().is_binary() {
                let enc = bin2graph::encode_db(&db).map_err(err)?;
                let hat = bin2graph::encode_query(&enc.sigma, db.schema(), &q).map_err(err)?;
                let got = brute_answers(&hat.query, &enc.db).map_err(err)?.answers;
                ensure(got.len() == want.len(), || tag("|Q^(D^)| differs"))?;
                check_decoded(got.iter().map(|t| hat.decode(t)).collect(), &want, &tag("binary"))?;
            }
            let enc2 = arb2bin::encode_db(&db);
            let ghd = compute_fc1ghd(&q).map_err(err)?;
            let q2 = arb2bin::encode_query(&enc2.sigma, &q, &ghd).map_err(err)?;
            let got2 = brute_answers(&q2.query, &enc2.db).map_err(err)?.answers;
            ensure(got2.len() == want.len(), || tag("|Q''(D'')| differs"))?;
            let decoded = got2
                .iter()
                .map(|t| arb2bin::decode_answer(t, &q2, &enc2))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            check_decoded(decoded, &want, &tag("arity reduction"))?;
            let ench = bin2graph::encode_db(&enc2.db).map_err(err)?;
            let hat = bin2graph::encode_query(&ench.sigma, &enc2.sigma.schema, &q2.query).map_err(err)?;
            let goth = brute_answers(&hat.query, &ench.db).map_err(err)?.answers;
            ensure(goth.len() == want.len(), || tag("|Q^(D^)| differs after both reductions"))?;
            let decoded = goth
                .iter()
                .map(|t| arb2bin::decode_answer(&hat.decode(t), &q2, &enc2))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            check_decoded(decoded, &want, &tag("both reductions"))?;
            checked += 1;
        }
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("{checked} instances, counts and decodings exact"))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut counts = [0usize; 4];
    for (ci, class) in SchemaClass::ALL.into_iter().enumerate() {
        let mut r = rng(8000 + ci as u64);
        for i in 0..300 {
            let (db, q) = random_instance(class, &mut r);
            let tag = |m: String| format!("{class:?} #{i}: {m}");
            let ghd = compute_fc1ghd(&q).map_err(err)?;
            ghd.check_invariants(&q).map_err(|e| tag(e.to_string()))?;
            let f = q.free_vars().len();
            ensure(ghd.witness_size() < 2 * f || (f == 0 && ghd.witness_size() == 0), || {
                tag(format!("|W|={} with {f} free", ghd.witness_size()))
            })?;
            counts[0] += 1;
            let sigma2 = arb2bin::binary_schema(db.schema());
            let q2 = arb2bin::encode_query(&sigma2, &q, &ghd).map_err(err)?;
            ensure(is_free_connex_acyclic(&q2.query), || tag("Q'' not free-connex acyclic".into()))?;
            let sh = bin2graph::graph_schema(&sigma2.schema).map_err(err)?;
            let qh = bin2graph::encode_query(&sh, &sigma2.schema, &q2.query).map_err(err)?;
            ensure(is_free_connex_acyclic(&qh.query), || tag("Q^ of Q'' not free-connex acyclic".into()))?;
            counts[1] += 1;
            if db.schema().is_binary() {
                let sh = bin2graph::graph_schema(db.schema()).map_err(err)?;
                let qh = bin2graph::encode_query(&sh, db.schema(), &q).map_err(err)?;
                ensure(is_free_connex_acyclic(&qh.query), || tag("Q^ not free-connex acyclic".into()))?;
                let (fh, fq) = (qh.query.head().len(), q.head().len());
                ensure(fh < 3 * fq || (fq == 0 && fh == 0), || tag(format!("|free(Q^)|={fh}")))?;
                counts[2] += 1;
            }
            let idx = IndexedDatabase::build(&db).map_err(err)?;
            idx.index().verify().map_err(&tag)?;
            counts[3] += 1;
        }
    }
    for db in [generate::cycle(50), generate::binary_tree(6), generate::star(9), movie()] {
        IndexedDatabase::build(&db).map_err(err)?.index().verify()?;
        counts[3] += 1;
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{} decompositions, {} Q''/Q^ pairs, {} binary Q^, {} indexes",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

fn criterion_9(s: &Sweep) -> Outcome {
    match &s.dp_mismatch {
        Some(m) => Err(m.clone()),
        None => Ok(format!("{} instances, full queries against homomorphism counts", s.dp_checks)),
    }
}

fn same_results(a: &IndexedDatabase, b: &IndexedDatabase, q: &ConjunctiveQuery) -> Result<(), String> {
    let ops = OpCounter::new();
    ensure(a.eval_enum(q).map_err(err)? == b.eval_enum(q).map_err(err)?, || "enum differs".into())?;
    let (ca, cb): (ExactCount, ExactCount) = (a.eval_count(q, &ops).map_err(err)?, b.eval_count(q, &ops).map_err(err)?);
    ensure(ca == cb, || "count differs".into())?;
    let bq = q.boolean_closure();
    ensure(a.eval_bool(&bq, &ops).map_err(err)? == b.eval_bool(&bq, &ops).map_err(err)?, || "bool differs".into())
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let m = movie();
    let mut cases: Vec<(String, IndexedDatabase, ConjunctiveQuery)> = Vec::new();
    for route in [Route::Binary, Route::Arbitrary] {
        cases.push((format!("movie/{route}"), IndexedDatabase::build_with(&m, route).map_err(err)?, movie_query(&m)));
    }
    for n in [10, 100, 1000] {
        let db = generate::cycle(n);
        cases.push((format!("C_{n}"), IndexedDatabase::build(&db).map_err(err)?, path_query(db.schema())));
    }
    for h in 4..=12 {
        let db = generate::binary_tree(h);
        cases.push((format!("tree h={h}"), IndexedDatabase::build(&db).map_err(err)?, path_query(db.schema())));
    }
    for (name, idx, q) in &cases {
        let text = idx.write();
        let back = IndexedDatabase::read(&text).map_err(|e| format!("{name}: {e}"))?;
        ensure(back.write() == text, || format!("{name}: rewrite not identical"))?;
        ensure(&back == idx, || format!("{name}: read index differs"))?;
        same_results(idx, &back, q).map_err(|e| format!("{name}: {e}"))?;
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("{} indexes round-trip bit-identically", cases.len()))
}

fn main() -> ExitCode {
    let sweep = std::thread::scope(|sc| {
        let sw = sc.spawn(sweep);
        let others: Vec<_> = [
            criterion_1 as fn() -> Outcome,
            criterion_3,
            criterion_4,
            criterion_5,
            criterion_7,
            criterion_8,
            criterion_10,
        ]
        .into_iter()
        .map(|f| sc.spawn(f))
        .collect();
        let results: Vec<Outcome> = others.into_iter().map(|h| h.join().unwrap_or_else(|_| Err("panicked".into()))).collect();
        (sw.join().expect("sweep panicked"), results)
    });
    let (s, r) = sweep;
    let results = [
        (1, r[0].clone()),
        (2, criterion_2(&s)),
        (3, r[1].clone()),
        (4, r[2].clone()),
        (5, r[3].clone()),
        (6, criterion_6(&s)),
        (7, r[4].clone()),
        (8, r[5].clone()),
        (9, criterion_9(&s)),
        (10, r[6].clone()),
    ];
    let mut failed = 0;
    for (n, res) in results {
        match res {
            Ok(detail) => println!("criterion {n}: PASS  {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL  {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
