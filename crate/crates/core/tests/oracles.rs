//! Hand-computed fixtures and brute-force oracles for the model, routing,
//! objective and hypervolume code.

mod common;

use common::{approx, bfs_hops, brute_front, small_design};
use hem3d_core::arch::{build_hem3d_default, Design, GridSpec, Technology, TileKind};
use hem3d_core::objectives::{latency, link_loads, load_stats, peak_temperature, window_load_stats};
use hem3d_core::pareto::{hypervolume, Insertion, ParetoArchive};
use hem3d_core::routing::compute_routes;
use hem3d_core::traffic::{synth_many_to_few, PowerProfile, SynthParams, TrafficProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REL: f64 = 1e-9;

fn line3() -> Design {
    // CPU - GPU - LLC on a 1x3 row; the CPU reaches the LLC in two hops
    let grid = GridSpec::new(1, 1, 3, 0.1, 2.0).unwrap();
    let kinds = vec![TileKind::Cpu, TileKind::Gpu, TileKind::Llc];
    Design::from_parts(grid, vec![0, 1, 2], kinds, vec![(0, 1), (1, 2)]).unwrap()
}

#[test]
fn latency_fixture_is_22() {
    let d = line3();
    let mut tech = Technology::tsv();
    tech.router_stages = 2;
    // two 2 mm hops at 0.375 cycles/mm give d = 1.5 cycles
    tech.link_delay_per_mm = 0.375;
    let table = compute_routes(&d, &tech).unwrap();
    assert_eq!(table.hops(0, 2), 2);
    let traffic = TrafficProfile::new(3, vec![vec![(0, 2, 4.0)]]).unwrap();
    let lat = latency(&d, &tech, &table, &traffic).unwrap();
    assert!(approx(lat, 22.0, REL), "{lat}");
}

#[test]
fn latency_is_linear_in_traffic() {
    for seed in 0..20 {
        let d = small_design(seed);
        let tech = Technology::tsv();
        let table = compute_routes(&d, &tech).unwrap();
        let (t, _) = synth_many_to_few(&d, &SynthParams { seed, windows: 3, ..SynthParams::default() }).unwrap();
        let base = latency(&d, &tech, &table, &t).unwrap();
        let doubled = latency(&d, &tech, &table, &t.scaled(2.5)).unwrap();
        assert!(approx(doubled, 2.5 * base, 1e-12));
    }
}

#[test]
fn single_flow_loads_exactly_its_path() {
    let d = line3();
    let table = compute_routes(&d, &Technology::tsv()).unwrap();
    let traffic = TrafficProfile::new(3, vec![vec![(0, 2, 3.0)]]).unwrap();
    assert_eq!(link_loads(&d, &table, &traffic, 0).unwrap(), vec![3.0, 3.0]);
    let (mean, std) = window_load_stats(&[0.0, 6.0]);
    assert!(approx(mean, 3.0, REL) && approx(std, 3.0, REL));
}

#[test]
fn loads_match_path_walking_oracle() {
    for seed in 0..40 {
        let d = small_design(seed);
        let table = compute_routes(&d, &Technology::tsv()).unwrap();
        let (t, _) = synth_many_to_few(&d, &SynthParams { seed, windows: 2, ..SynthParams::default() }).unwrap();
        for w in 0..2 {
            let mut oracle = vec![0.0; d.link_count()];
            for f in t.flows(w) {
                let path = table.path(f.src, f.dst);
                for hop in path.windows(2) {
                    oracle[d.link_id(hop[0], hop[1]).unwrap()] += f.rate;
                }
            }
            let loads = link_loads(&d, &table, &t, w).unwrap();
            for (a, b) in loads.iter().zip(&oracle) {
                assert!(approx(*a, *b, 1e-12));
            }
        }
        assert!(load_stats(&d, &table, &t).is_ok());
    }
}

#[test]
fn hops_match_bfs_oracle() {
    for seed in 0..60 {
        let d = small_design(seed);
        let table = compute_routes(&d, &Technology::tsv()).unwrap();
        let oracle = bfs_hops(&d);
        for i in 0..d.tile_count() {
            for j in 0..d.tile_count() {
                assert_eq!(table.hops(i, j), oracle[i][j], "seed {seed} pair ({i},{j})");
                assert_eq!(table.path(i, j).len() as u32, oracle[i][j] + 1);
            }
        }
    }
}

#[test]
fn two_tier_stack_is_50_5() {
    let grid = GridSpec::new(2, 1, 1, 0.1, 2.0).unwrap();
    let d = Design::from_parts(grid, vec![0, 1], vec![TileKind::Gpu, TileKind::Gpu], vec![(0, 1)]).unwrap();
    let mut tech = Technology::tsv();
    tech.r_tier = vec![1.0, 1.0];
    tech.r_base = 0.5;
    tech.lateral_factor = 1.0;
    tech.power_scale = 1.0;
    let power = PowerProfile::new(2, vec![vec![2.0, 1.0]]).unwrap();
    let t = peak_temperature(&d, &tech, &power, 45.0).unwrap();
    assert!(approx(t, 50.5, REL), "{t}");
}

#[test]
fn m3d_planar_distances_scale_by_footprint() {
    // single tier, so only the planar footprint differs
    let grid = GridSpec::new(1, 3, 3, 0.1, 2.0).unwrap();
    let kinds = vec![TileKind::Gpu; 9];
    let links = vec![(0, 8), (0, 1), (1, 5), (2, 6), (3, 4), (4, 8), (5, 7), (6, 7)];
    let d = Design::from_parts(grid, (0..9).collect(), kinds, links).unwrap();
    let m3d = Technology::m3d();
    let tsv = Technology::tsv();
    let a = compute_routes(&d, &m3d).unwrap();
    let b = compute_routes(&d, &tsv).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            assert!(approx(a.dist(i, j), m3d.tile_footprint_scale * b.dist(i, j), 1e-12));
        }
    }
}

#[test]
fn synthetic_traffic_total_matches_closed_form() {
    let d = small_design(7);
    let mix = d.mix();
    let params = SynthParams { windows: 4, intensity: 0.1, seed: 5, ..SynthParams::default() };
    let (t, _) = synth_many_to_few(&d, &params).unwrap();
    // per window: 2 * intensity * (C * w_cpu + G * w_gpu), scaled by m_t in [0.9, 1.1]
    let nominal = 2.0 * 0.1 * (mix.cpu as f64 * 1.0 + mix.gpu as f64 * 3.0);
    for w in 0..4 {
        let total = t.window_total(w);
        assert!(total >= 0.9 * nominal - 1e-12 && total <= 1.1 * nominal + 1e-12, "{total} vs {nominal}");
    }
}

#[test]
fn default_design_counts() {
    let d = build_hem3d_default(&Technology::m3d(), 1).unwrap();
    assert_eq!(d.tile_count(), 64);
    assert_eq!(d.link_count(), 144);
    assert!(d.is_connected());
}

#[test]
fn two_point_hypervolume_is_3() {
    let hv = hypervolume(&[vec![1.0, 2.0], vec![2.0, 1.0]], &[3.0, 3.0]);
    assert!(approx(hv, 3.0, REL));
}

fn random_front(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<f64>> {
    let n = rng.gen_range(1..=12);
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect()).collect()
}

#[test]
fn hypervolume_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for d in 2..=4 {
        for _ in 0..5 {
            let pts = random_front(&mut rng, d);
            let reference = vec![1.0; d];
            let exact = hypervolume(&pts, &reference);
            // sample in the box spanned by the componentwise minimum and the reference
            let lo: Vec<f64> = (0..d).map(|k| pts.iter().map(|p| p[k]).fold(1.0, f64::min)).collect();
            let volume: f64 = lo.iter().map(|l| 1.0 - l).product();
            let samples = 200_000;
            let hits = (0..samples)
                .filter(|_| {
                    let x: Vec<f64> = lo.iter().map(|&l| rng.gen_range(l..1.0)).collect();
                    pts.iter().any(|p| p.iter().zip(&x).all(|(a, b)| a <= b))
                })
                .count();
            let estimate = volume * hits as f64 / samples as f64;
            assert!(approx(exact, estimate, 0.02), "d={d}: {exact} vs {estimate}");
        }
    }
}

#[test]
fn archive_matches_pairwise_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d in 2..=4 {
        let pts: Vec<Vec<f64>> =
            (0..200).map(|_| (0..d).map(|_| rng.gen_range(0..20) as f64 / 4.0).collect()).collect();
        let mut archive = ParetoArchive::new(vec![10.0; d]).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let r = archive.insert(i, p.clone(), ()).unwrap();
            assert_eq!(r == Insertion::Dominated, archive.entries().iter().all(|e| e.id != i));
        }
        let mut got: Vec<Vec<f64>> = archive.entries().iter().map(|e| e.objectives.clone()).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, brute_front(&pts));
    }
}
