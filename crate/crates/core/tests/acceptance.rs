//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use lfiguard::benchmarks::{benchmark, benchmark_names};
use lfiguard::code::Code;
use lfiguard::encoder::{
    audit_encoding, configuration_tiers, min_width, solve_configuration, Block, Configuration,
    Encoding, ModelVariant,
};
use lfiguard::floorplan::{
    build_placement_problem, check_placement, place_with_width, FfGeometry, FfSpec, FfTag,
    PlacedFf, Placement, SeparationRegion, SeparationRequirement, DEFAULT_GRID_UNIT_UM,
};
use lfiguard::fsm::FsmSpec;
use lfiguard::ilp;
use lfiguard::laser::{
    apply_fault, apply_set, bit_map, cover_set, enumerate_vulnerable_sets, AtomSet, AttackerModel,
    FaultAtom, Region, SweepMode, VulnerableSets,
};
use lfiguard::metrics::{analyze, compute_stvm, compute_svt, compute_vm};
use lfiguard::pipeline::{run_pipeline, PipelineConfig, Verdict};
use lfiguard::rational::ratio;
use lfiguard::scenarios::{self, Scenario};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Artifacts collected by the pipeline criterion for the audit criterion.
#[derive(Default)]
struct Corpus {
    encodings: Vec<(FsmSpec, Encoding)>,
    placements: Vec<(Encoding, Placement)>,
}

fn main() {
    let mut corpus = Corpus::default();
    let mut failed = 0;
    let mut report =
        |id: usize, title: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Check| {
            let start = Instant::now();
            let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
            let elapsed = start.elapsed();
            let result = match (result, limit) {
                (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
                (r, _) => r,
            };
            match result {
                Ok(detail) => println!("criterion {id} ({title}): PASS [{elapsed:.2?}] {detail}"),
                Err(detail) => {
                    failed += 1;
                    println!("criterion {id} ({title}): FAIL [{elapsed:.2?}] {detail}");
                }
            }
        };
    let secs = Duration::from_secs;
    report(1, "worked layouts", Some(secs(1)), &mut worked_layouts);
    report(2, "pipeline guarantee", Some(secs(120)), &mut || {
        pipeline_guarantee(&mut corpus)
    });
    report(3, "fault-model discrimination", None, &mut discrimination);
    let mut oracle = || oracle_equivalence(&mut corpus);
    report(
        4,
        "exact solver vs enumeration",
        Some(secs(300)),
        &mut oracle,
    );
    report(5, "constraint audit", None, &mut || audit(&corpus));
    report(6, "metric invariants", None, &mut invariants);
    report(7, "determinism", None, &mut determinism);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- 1

fn right_pattern(c: &Code, m: usize) -> String {
    let s = c.to_string();
    format!("{}{}", "X".repeat(s.len() - m), &s[s.len() - m..])
}

fn svt_patterns(
    s: &Scenario,
    family: &VulnerableSets,
) -> Result<BTreeSet<(String, String)>, String> {
    let svt = compute_svt(&s.encoding, &s.fsm, family, &bit_map(&s.placement))
        .map_err(|e| e.to_string())?;
    let m = s.encoding.m_right;
    Ok(svt
        .iter()
        .map(|e| {
            (
                right_pattern(&s.encoding.codes[e.source], m),
                right_pattern(&e.result, m),
            )
        })
        .collect())
}

fn worked_layouts() -> Check {
    let both = || BTreeSet::from([Region::Reset, Region::Set]);
    for (s, pair_region, want) in [
        (
            scenarios::reset_pair(),
            Region::Reset,
            [
                ("XX11", "XX00"),
                ("XX10", "XX00"),
                ("XX01", "XX00"),
                ("XX11", "XX01"),
                ("XX11", "XX10"),
            ],
        ),
        (
            scenarios::set_pair(),
            Region::Set,
            [
                ("XX00", "XX11"),
                ("XX00", "XX10"),
                ("XX00", "XX01"),
                ("XX10", "XX11"),
                ("XX01", "XX11"),
            ],
        ),
    ] {
        let family = enumerate_vulnerable_sets(&s.placement, &s.attacker, SweepMode::SetReset, 1)
            .map_err(|e| e.to_string())?;
        let mut expected: BTreeMap<BTreeSet<usize>, BTreeMap<usize, BTreeSet<Region>>> = (0..4)
            .map(|f| (BTreeSet::from([f]), BTreeMap::from([(f, both())])))
            .collect();
        expected.insert(
            BTreeSet::from([0, 1]),
            BTreeMap::from([(0, both()), (1, both())]),
        );
        let only = BTreeSet::from([pair_region]);
        expected.insert(
            BTreeSet::from([2, 3]),
            BTreeMap::from([(2, only.clone()), (3, only)]),
        );
        let got = family.capabilities();
        ensure(got == expected, || format!("{}: family {got:?}", s.name))?;
        let want: BTreeSet<(String, String)> = want
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let got = svt_patterns(&s, &family)?;
        ensure(got == want, || format!("{}: SVT {got:?}", s.name))?;
        let r = analyze(&s.fsm, &s.encoding, &s.placement, &s.attacker, 1)
            .map_err(|e| e.to_string())?;
        ensure(r.stvm == ratio(5, 9), || {
            format!("{}: STVM {}", s.name, r.stvm)
        })?;
    }
    Ok("six-set family and both five-entry lists reproduced, STVM 5/9".into())
}

// ---------------------------------------------------------------- 2

fn pipeline_guarantee(corpus: &mut Corpus) -> Check {
    let shapes = [(5, 10, 2), (7, 11, 2), (7, 9, 2), (9, 11, 3), (12, 13, 3)];
    let mut runs = 0;
    for (name, shape) in benchmark_names().zip(shapes) {
        let fsm = benchmark(name).unwrap();
        let got = (
            fsm.num_states(),
            fsm.transitions().len(),
            fsm.authorized().len(),
        );
        ensure(got == shape, || format!("{name} has shape {got:?}"))?;
        for variant in ModelVariant::ALL {
            for x in 1..=3 {
                let config = PipelineConfig::new(variant, x).map_err(|e| e.to_string())?;
                let out = run_pipeline(&fsm, &config)
                    .map_err(|e| format!("{name} {variant} x={x}: {e}"))?;
                let r = &out.verification.report;
                ensure(out.verdict() == Verdict::Secure && r.stvm.is_zero(), || {
                    format!(
                        "{name} {variant} x={x}: verdict {:?}, STVM {}",
                        out.verdict(),
                        r.stvm
                    )
                })?;
                corpus.encodings.push((fsm.clone(), out.encoding.clone()));
                corpus.placements.push((out.encoding, out.placement));
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} pipelines exit 0 with STVM = 0"))
}

// ---------------------------------------------------------------- 3

fn discrimination() -> Check {
    let s = scenarios::shared_reset_beam();
    let r =
        analyze(&s.fsm, &s.encoding, &s.placement, &s.attacker, 1).map_err(|e| e.to_string())?;
    ensure(r.svm > BigRational::zero() && r.svt.is_empty(), || {
        format!("SVM {} with {} SVT entries", r.svm, r.svt.len())
    })?;

    let s = scenarios::shared_set_beam();
    let bits = bit_map(&s.placement);
    let au = &s.encoding.codes[0];
    ensure(au.to_string() == "01", || format!("AU coded {au}"))?;
    let sr = enumerate_vulnerable_sets(&s.placement, &s.attacker, SweepMode::SetReset, 1)
        .map_err(|e| e.to_string())?;
    let (lasers, sr_next) = sr
        .members()
        .filter(|(set, _)| set.support().len() == 2)
        .find_map(|(set, w)| {
            let next = apply_set(au, set, &bits).ok()?.0;
            (next.to_string() == "11").then(|| (w.to_vec(), next))
        })
        .ok_or("no single laser sets both bits")?;
    let flip = AtomSet::from_atoms(cover_set(
        lasers[0],
        s.attacker.diameter,
        &s.placement,
        SweepMode::BitFlip,
    ));
    let bf_next = apply_set(au, &flip, &bits).map_err(|e| e.to_string())?.0;
    ensure(bf_next.to_string() == "10", || {
        format!("bit-flip prediction {bf_next}")
    })?;
    Ok(format!(
        "SVM {} with empty SVT; laser at {:?} gives 01 -> {sr_next} (set-reset) vs 01 -> {bf_next} (bit-flip)",
        r.svm, lasers[0]
    ))
}

// ---------------------------------------------------------------- 4

fn random_fsm(rng: &mut ChaCha8Rng, g: usize) -> FsmSpec {
    let names: Vec<String> = (0..g).map(|i| format!("S{i}")).collect();
    let mut edges: BTreeSet<(usize, usize)> = (0..g).map(|i| (i, (i + 1) % g)).collect();
    for _ in 0..rng.gen_range(0..=g) {
        edges.insert((rng.gen_range(0..g), rng.gen_range(0..g)));
    }
    let candidates: Vec<(usize, usize)> = edges.iter().copied().filter(|(a, b)| a != b).collect();
    let mut ats = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=2) {
        ats.insert(candidates[rng.gen_range(0..candidates.len())]);
    }
    let weights: Vec<usize> = edges.iter().map(|_| rng.gen_range(1..=5)).collect();
    let total: usize = weights.iter().sum();
    FsmSpec::new(
        "random",
        names.clone(),
        &names[0],
        edges
            .iter()
            .zip(&weights)
            .map(|(&(a, b), &w)| (names[a].clone(), names[b].clone(), ratio(w, total)))
            .collect(),
        ats.iter()
            .map(|&(a, b)| (names[a].clone(), names[b].clone()))
            .collect(),
    )
    .expect("random FSM is valid")
}

/// Bit `l` of `v` read left to right.
fn bit(v: u32, n: usize, l: usize) -> bool {
    (v >> (n - 1 - l)) & 1 == 1
}

#[derive(Clone, Copy, PartialEq)]
enum Dir {
    Any,
    Rising,
    Falling,
}

struct Guard {
    from: usize,
    to: usize,
    positions: Vec<usize>,
    dir: Dir,
}

fn guards(fsm: &FsmSpec, variant: ModelVariant, cfg: &Configuration) -> Vec<Guard> {
    fsm.authorized()
        .iter()
        .zip(&cfg.at_blocks)
        .map(|(&(from, to), &block)| {
            let positions: Vec<usize> = match block {
                Block::Right => (cfg.n - cfg.m_right..cfg.n).collect(),
                Block::Left => (0..cfg.m_left).collect(),
            };
            let dir = match (variant, block) {
                (ModelVariant::BitFlip, _) => Dir::Any,
                (ModelVariant::ResetModel, _) | (ModelVariant::SetAndReset, Block::Right) => {
                    Dir::Rising
                }
                (ModelVariant::SetModel, _) | (ModelVariant::SetAndReset, Block::Left) => {
                    Dir::Falling
                }
            };
            Guard {
                from,
                to,
                positions,
                dir,
            }
        })
        .collect()
}

fn guard_ok(g: &Guard, a: &dyn Fn(usize) -> bool, p: &dyn Fn(usize) -> bool, x: usize) -> bool {
    let hd = g.positions.iter().filter(|&&l| a(l) != p(l)).count();
    let ones = g.positions.iter().filter(|&&l| a(l)).count();
    let zeros = g.positions.len() - ones;
    hd > x
        && match g.dir {
            Dir::Any => true,
            Dir::Rising => zeros > x && g.positions.iter().all(|&l| a(l) || p(l)),
            Dir::Falling => ones > x && g.positions.iter().all(|&l| !(a(l) && p(l))),
        }
}

/// Least switching activity over every injective code assignment meeting
/// the guards, or `None` when no assignment does.
fn brute_force_encoding(
    fsm: &FsmSpec,
    variant: ModelVariant,
    x: usize,
    cfg: &Configuration,
) -> Option<BigRational> {
    let (g, n) = (fsm.num_states(), cfg.n);
    let mut weight = vec![vec![BigRational::zero(); g]; g];
    for t in fsm.transitions() {
        if t.from != t.to {
            let (i, j) = (t.from.min(t.to), t.from.max(t.to));
            weight[i][j] += t.prob.clone();
        }
    }
    let gs = guards(fsm, variant, cfg);
    let mut best: Option<BigRational> = None;
    let mut codes = Vec::new();
    fn rec(
        g: usize,
        n: usize,
        x: usize,
        gs: &[Guard],
        weight: &[Vec<BigRational>],
        codes: &mut Vec<u32>,
        best: &mut Option<BigRational>,
    ) {
        let s = codes.len();
        if s == g {
            let mut total = BigRational::zero();
            for i in 0..g {
                for j in i + 1..g {
                    let hd = (codes[i] ^ codes[j]).count_ones() as usize;
                    total += weight[i][j].clone() * BigRational::from_integer(hd.into());
                }
            }
            if best.as_ref().is_none_or(|b| total < *b) {
                *best = Some(total);
            }
            return;
        }
        for v in 0..1u32 << n {
            if codes.contains(&v) {
                continue;
            }
            codes.push(v);
            let ok = gs.iter().filter(|gd| gd.from.max(gd.to) == s).all(|gd| {
                let (a, p) = (codes[gd.from], codes[gd.to]);
                guard_ok(gd, &|l| bit(a, n, l), &|l| bit(p, n, l), x)
            });
            if ok {
                rec(g, n, x, gs, weight, codes, best);
            }
            codes.pop();
        }
    }
    rec(g, n, x, &gs, &weight, &mut codes, &mut best);
    best
}

/// Least height by trying every corner position, with the pair rules read
/// directly: bodies apart (by D when the pair separates bodies) along some
/// axis, and each separated point pair D apart along some axis.
fn brute_force_height(
    entries: &[FfSpec],
    req: &SeparationRequirement,
    width: i64,
    bound: i64,
) -> Option<i64> {
    let d = req.min_distance;
    let apart = |lo_a: i64, len_a: i64, lo_b: i64, len_b: i64, gap: i64| {
        lo_a + len_a + gap <= lo_b || lo_b + len_b + gap <= lo_a
    };
    let fits = |pos: &[(i64, i64)]| {
        let j = pos.len() - 1;
        let (gj, (yj, zj)) = (entries[j].geometry, pos[j]);
        (0..j).all(|i| {
            let (gi, (yi, zi)) = (entries[i].geometry, pos[i]);
            let region = req.region(i, j);
            let gap = if region == Some(SeparationRegion::Body) {
                d
            } else {
                0
            };
            let far = |oi: (i64, i64), oj: (i64, i64)| {
                (yi + oi.0 - yj - oj.0).abs() >= d || (zi + oi.1 - zj - oj.1).abs() >= d
            };
            (apart(yi, gi.w, yj, gj.w, gap) || apart(zi, gi.h, zj, gj.h, gap))
                && match region {
                    Some(SeparationRegion::Reset) => far(gi.reset_offset, gj.reset_offset),
                    Some(SeparationRegion::Set) => far(gi.set_offset, gj.set_offset),
                    Some(SeparationRegion::Both) => {
                        far(gi.reset_offset, gj.reset_offset) && far(gi.set_offset, gj.set_offset)
                    }
                    _ => true,
                }
        })
    };
    fn rec(
        entries: &[FfSpec],
        w: i64,
        top: i64,
        pos: &mut Vec<(i64, i64)>,
        fits: &dyn Fn(&[(i64, i64)]) -> bool,
    ) -> bool {
        if pos.len() == entries.len() {
            return true;
        }
        let g = entries[pos.len()].geometry;
        for z in 0..=top - g.h {
            for y in 0..=w - g.w {
                pos.push((y, z));
                if fits(pos) && rec(entries, w, top, pos, fits) {
                    return true;
                }
                pos.pop();
            }
        }
        false
    }
    let tallest = entries.iter().map(|e| e.geometry.h).max()?;
    (tallest..=bound).find(|&top| rec(entries, width, top, &mut Vec::new(), &fits))
}

fn random_placement_instance(rng: &mut ChaCha8Rng) -> (Vec<FfSpec>, SeparationRequirement, i64) {
    let g = rng.gen_range(1..=4);
    let entries: Vec<FfSpec> = (0..g)
        .map(|_| {
            let (w, h) = (2 * rng.gen_range(1..=3), 2 * rng.gen_range(1..=2));
            let geometry = FfGeometry {
                w,
                h,
                reset_offset: (rng.gen_range(0..=w), rng.gen_range(0..=h)),
                set_offset: (rng.gen_range(0..=w), rng.gen_range(0..=h)),
            };
            FfSpec {
                geometry,
                tag: if rng.gen_bool(0.7) {
                    FfTag::Sff
                } else {
                    FfTag::Nff
                },
            }
        })
        .collect();
    let regions = [
        SeparationRegion::Reset,
        SeparationRegion::Set,
        SeparationRegion::Both,
        SeparationRegion::Body,
    ];
    let mut pairs = Vec::new();
    for i in 0..g {
        for j in i + 1..g {
            if entries[i].tag == FfTag::Sff && entries[j].tag == FfTag::Sff {
                pairs.push((i, j, regions[rng.gen_range(0..4)]));
            }
        }
    }
    let widest = entries.iter().map(|e| e.geometry.w).max().unwrap();
    let width = rng.gen_range(widest..=12);
    (
        entries,
        SeparationRequirement {
            pairs,
            min_distance: rng.gen_range(1..=5),
        },
        width,
    )
}

fn oracle_equivalence(corpus: &mut Corpus) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut feasible, mut done) = (0, 0);
    while done < 100 {
        let g = rng.gen_range(2..=5);
        let fsm = random_fsm(&mut rng, g);
        let variant = ModelVariant::ALL[rng.gen_range(0..4)];
        let x = rng.gen_range(1..=2);
        let n = rng.gen_range(min_width(fsm.num_states())..=4);
        let configs: Vec<Configuration> = configuration_tiers(&fsm, variant, x, n)
            .into_iter()
            .flatten()
            .collect();
        if configs.is_empty() {
            continue;
        }
        let cfg = &configs[rng.gen_range(0..configs.len())];
        let want = brute_force_encoding(&fsm, variant, x, cfg);
        let got = solve_configuration(&fsm, variant, x, cfg).map_err(|e| e.to_string())?;
        ensure(got.as_ref().map(|e| e.objective.clone()) == want, || {
            format!("encoding instance {done} ({variant}, x={x}, {cfg:?}): solver {:?} vs enumeration {want:?}", got.as_ref().map(|e| e.objective.to_string()))
        })?;
        if let Some(enc) = got {
            let gs = guards(&fsm, variant, cfg);
            let ok = gs.iter().all(|gd| {
                let (a, p) = (&enc.codes[gd.from], &enc.codes[gd.to]);
                guard_ok(gd, &|l| a.bit(l), &|l| p.bit(l), x)
            });
            ensure(ok, || {
                format!("encoding instance {done}: returned codes break a guard")
            })?;
            corpus.encodings.push((fsm, enc));
            feasible += 1;
        }
        done += 1;
    }
    let mut placed = 0;
    for k in 0..50 {
        let (entries, req, width) = random_placement_instance(&mut rng);
        let bound = 12;
        let want = brute_force_height(&entries, &req, width, bound);
        let got = place_with_width(&entries, &req, width, bound, DEFAULT_GRID_UNIT_UM)
            .map_err(|e| e.to_string())?;
        let model =
            build_placement_problem(&entries, &req, width, bound).map_err(|e| e.to_string())?;
        let solution = ilp::solve(&model.problem).map_err(|e| e.to_string())?;
        let from_ilp = solution.is_optimal().then(|| solution.value(model.height));
        let heights = (got.as_ref().map(|p| p.height), from_ilp);
        ensure(heights == (want, want), || {
            format!("placement instance {k} (W={width}): search/ILP {heights:?} vs enumeration {want:?}")
        })?;
        if let Some(p) = got {
            ensure(check_placement(&p, &req).is_empty(), || {
                format!("placement instance {k} fails its audit")
            })?;
            placed += 1;
        }
    }
    Ok(format!("100 encoding instances ({feasible} feasible) and 50 placement instances ({placed} feasible) agree"))
}

// ---------------------------------------------------------------- 5

fn audit(corpus: &Corpus) -> Check {
    ensure(
        !corpus.encodings.is_empty() && !corpus.placements.is_empty(),
        || "empty corpus".into(),
    )?;
    let mut violations = Vec::new();
    for (fsm, enc) in &corpus.encodings {
        violations.extend(
            audit_encoding(fsm, enc)
                .into_iter()
                .map(|v| format!("{}: {v:?}", fsm.name())),
        );
    }
    for (enc, p) in &corpus.placements {
        let (_, req) =
            lfiguard::floorplan::requirement_for_encoding(enc, FfGeometry::default(), 10);
        violations.extend(
            check_placement(p, &req)
                .into_iter()
                .map(|v| format!("{v:?}")),
        );
    }
    ensure(violations.is_empty(), || {
        format!(
            "{} violations, first {:?}",
            violations.len(),
            violations.first()
        )
    })?;
    Ok(format!(
        "{} encodings and {} placements, zero violations",
        corpus.encodings.len(),
        corpus.placements.len()
    ))
}

// ---------------------------------------------------------------- 6

struct Layout {
    fsm: FsmSpec,
    encoding: Encoding,
    placement: Placement,
}

fn random_layout(rng: &mut ChaCha8Rng) -> Layout {
    let n = rng.gen_range(2..=4);
    let g = rng.gen_range(2..=(1usize << n).min(5));
    let fsm = random_fsm(rng, g);
    let mut pool: Vec<u64> = (0..1u64 << n).collect();
    let codes = (0..g)
        .map(|_| Code::from_value(pool.swap_remove(rng.gen_range(0..pool.len())), n))
        .collect();
    let encoding = Encoding {
        n,
        codes,
        m_right: rng.gen_range(1..=n),
        m_left: 0,
        variant: ModelVariant::ALL[rng.gen_range(0..4)],
        x: 1,
        objective: BigRational::zero(),
        at_blocks: vec![Block::Right; fsm.authorized().len()],
    };
    let ffs: Vec<PlacedFf> = (0..n)
        .map(|i| {
            let (w, h) = (2 * rng.gen_range(1..=5), 2 * rng.gen_range(1..=3));
            let geometry = FfGeometry {
                w,
                h,
                reset_offset: (rng.gen_range(0..=w), rng.gen_range(0..=h)),
                set_offset: (rng.gen_range(0..=w), rng.gen_range(0..=h)),
            };
            let (y, z) = (rng.gen_range(0..=30), rng.gen_range(0..=30));
            PlacedFf {
                index: i,
                bit_position: i,
                tag: FfTag::Sff,
                y,
                z,
                geometry,
            }
        })
        .collect();
    let width = ffs.iter().map(|f| f.y + f.geometry.w).max().unwrap();
    let height = ffs.iter().map(|f| f.z + f.geometry.h).max().unwrap();
    Layout {
        fsm,
        encoding,
        placement: Placement {
            ffs,
            width,
            height,
            grid_unit_um: DEFAULT_GRID_UNIT_UM,
        },
    }
}

fn sweep(l: &Layout, x: usize, d: i64, step: i64, mode: SweepMode) -> VulnerableSets {
    enumerate_vulnerable_sets(
        &l.placement,
        &AttackerModel::new(x, d, step).unwrap(),
        mode,
        1,
    )
    .unwrap()
}

fn random_code(rng: &mut ChaCha8Rng, n: usize) -> Code {
    Code::new((0..n).map(|_| rng.gen_bool(0.5)).collect())
}

fn invariants() -> Check {
    const CASES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..CASES {
        let l = random_layout(&mut rng);
        let d = rng.gen_range(2..=12);
        let mode = SweepMode::for_variant(l.encoding.variant);
        let bits = bit_map(&l.placement);
        let classes = l.fsm.classify();
        let at = |what: &str| format!("case {case}: {what}");

        for x in 1..l.encoding.n {
            let (a, b) = (
                compute_vm(&l.encoding, &classes, x),
                compute_vm(&l.encoding, &classes, x + 1),
            );
            ensure(a <= b, || at(&format!("VM {a} at x={x} above {b}")))?;
        }

        let e1 = sweep(&l, 1, d, 1, mode);
        let e2 = sweep(&l, 2, d, 1, mode);
        let stvm = |e: &VulnerableSets| {
            compute_stvm(&compute_svt(&l.encoding, &l.fsm, e, &bits).unwrap(), &l.fsm).unwrap()
        };
        ensure(stvm(&e1) <= stvm(&e2), || at("STVM decreases with x"))?;

        let covers: Vec<AtomSet> = e2.covers().keys().copied().collect();
        let mut closure: BTreeSet<AtomSet> = covers.iter().copied().collect();
        for a in &covers {
            for b in &covers {
                closure.insert(a.union(*b));
            }
        }
        ensure(e2.sets() == closure, || {
            at("E(2) is not the pairwise union closure of single covers")
        })?;
        ensure(e1.sets().is_subset(&e2.sets()), || {
            at("E(1) not within E(2)")
        })?;

        let coarse = sweep(&l, 2, d, 2, mode);
        ensure(coarse.sets().is_subset(&e2.sets()), || {
            at("coarse sweep found a set the fine sweep missed")
        })?;

        let state = random_code(&mut rng, l.encoding.n);
        let ff = rng.gen_range(0..l.encoding.n);
        let flips: BTreeSet<FaultAtom> = (0..l.encoding.n)
            .filter(|&f| f == ff || rng.gen_bool(0.5))
            .map(|f| FaultAtom::new(f, Region::Flip))
            .collect();
        let once = apply_fault(&state, &flips, &bits).unwrap().0;
        let twice = apply_fault(&once, &flips, &bits).unwrap().0;
        ensure(twice == state && once != state, || {
            at("flip is not an involution")
        })?;
        let region = if rng.gen_bool(0.5) {
            Region::Set
        } else {
            Region::Reset
        };
        let forced: BTreeSet<FaultAtom> = (0..l.encoding.n)
            .filter(|_| rng.gen_bool(0.5))
            .map(|f| FaultAtom::new(f, region))
            .collect();
        let once = apply_fault(&state, &forced, &bits).unwrap().0;
        let twice = apply_fault(&once, &forced, &bits).unwrap().0;
        ensure(twice == once, || at("set/reset is not idempotent"))?;
    }
    Ok(format!(
        "{CASES} randomized cases per property, zero failures"
    ))
}

// ---------------------------------------------------------------- 7

fn determinism() -> Check {
    for (name, variant, x) in [
        ("fsm_controller", ModelVariant::ResetModel, 1),
        ("viirf", ModelVariant::SetAndReset, 2),
        ("aes", ModelVariant::BitFlip, 2),
    ] {
        let fsm = benchmark(name).unwrap();
        let docs = |partitions: usize| {
            let mut config = PipelineConfig::new(variant, x).unwrap();
            config.partitions = partitions;
            let out = run_pipeline(&fsm, &config).unwrap();
            [
                out.encoding.to_json_string(&fsm),
                out.placement.to_json_string(),
                out.verification.report.to_json_string(&fsm, &out.encoding),
            ]
        };
        let first = docs(1);
        for partitions in [1, 2, 8] {
            ensure(docs(partitions) == first, || {
                format!("{name}: artifacts differ with {partitions} partitions")
            })?;
        }
    }
    for s in scenarios::all() {
        let witnesses = |partitions: usize| {
            let e = enumerate_vulnerable_sets(
                &s.placement,
                &s.attacker,
                SweepMode::SetReset,
                partitions,
            )
            .unwrap();
            let f = enumerate_vulnerable_sets(
                &s.placement,
                &s.attacker,
                SweepMode::BitFlip,
                partitions,
            )
            .unwrap();
            let list = |v: &VulnerableSets| {
                v.members()
                    .map(|(a, w)| (*a, w.to_vec()))
                    .collect::<Vec<_>>()
            };
            (list(&e), list(&f))
        };
        let first = witnesses(1);
        for partitions in [2, 8] {
            ensure(witnesses(partitions) == first, || {
                format!("{}: sweep differs with {partitions} partitions", s.name)
            })?;
        }
    }
    Ok("repeated pipelines byte-identical; sweeps identical at 1, 2 and 8 partitions".into())
}
