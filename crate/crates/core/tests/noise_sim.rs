use fbm_delay::harness::verify_fbm_law;
use fbm_delay::process::{dr_path, r_direct, r_path, synthesize_brownian, synthesize_fbm, w_path};
use fbm_delay::{synthesize_dr, synthesize_w, Ensemble, HurstParameter, NoisePath, SimulationGrid};

fn grid() -> SimulationGrid {
    SimulationGrid::new(1.0, 1024, 8.0).unwrap()
}

#[test]
fn increments_split_into_local_and_history_parts() {
    let g = grid();
    let noise = NoisePath::generate(17, &g);
    for h in [0.55, 0.75, 0.9] {
        let hp = HurstParameter::new(h).unwrap();
        let bh = synthesize_fbm(&noise, &hp).unwrap();
        for seg in [0.0, 0.25, 0.5] {
            let w = w_path(&noise, &hp, seg).unwrap();
            let r = r_path(&noise, &hp, seg).unwrap();
            let a = g.index_of(seg).unwrap();
            assert_eq!(w.values[0], 0.0);
            assert_eq!(r.values[0], 0.0);
            for (i, j) in (a..=g.horizon_cells()).enumerate().step_by(37) {
                let lhs = bh.values[j] - bh.values[a];
                assert!((lhs - w.values[i] - r.values[i]).abs() < 1e-10, "h={h} seg={seg} j={j}");
                let direct = r_direct(&noise, &hp, seg, g.time(j)).unwrap();
                assert!((direct - r.values[i]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn history_parts_ignore_the_future() {
    let g = grid();
    let noise = NoisePath::generate(2, &g);
    let hp = HurstParameter::new(0.7).unwrap();
    let a = g.index_of(0.5).unwrap();
    let masked = noise.masked_from(a);
    assert_ne!(noise.checksum(), masked.checksum());
    for t in [0.51, 0.75, 1.0] {
        let full = synthesize_dr(&noise, &hp, 0.5, t).unwrap();
        let cut = synthesize_dr(&masked, &hp, 0.5, t).unwrap();
        assert_eq!(full, cut);
    }
    // W uses only (seg_start, t]
    let w_full = synthesize_w(&noise, &hp, 0.5, 0.75).unwrap();
    let w_cut = synthesize_w(&noise.masked_from(g.index_of(0.75).unwrap()), &hp, 0.5, 0.75).unwrap();
    assert_eq!(w_full, w_cut);
}

#[test]
fn brownian_index_degenerates() {
    let g = grid();
    let noise = NoisePath::generate(9, &g);
    let hp = HurstParameter::BROWNIAN;
    let b = synthesize_brownian(&noise);
    let bh = synthesize_fbm(&noise, &hp).unwrap();
    assert_eq!(b.values, bh.values);
    assert!(dr_path(&noise, &hp, 0.25).unwrap().values.iter().all(|v| *v == 0.0));
    assert!(r_path(&noise, &hp, 0.25).unwrap().values.iter().all(|v| *v == 0.0));
    let w = synthesize_w(&noise, &hp, 0.25, 0.75).unwrap();
    let (i, j) = (g.index_of(0.25).unwrap(), g.index_of(0.75).unwrap());
    assert!((w - (b.values[j] - b.values[i])).abs() < 1e-14);
}

#[test]
fn dr_domain_and_segment_errors() {
    let g = grid();
    let noise = NoisePath::generate(1, &g);
    let hp = HurstParameter::new(0.75).unwrap();
    assert!(synthesize_dr(&noise, &hp, 0.5, 0.5).is_err());
    assert!(synthesize_dr(&noise, &hp, 0.5, 0.25).is_err());
    assert!(synthesize_w(&noise, &hp, 0.5, 0.25).is_err());
    assert_eq!(synthesize_w(&noise, &hp, 0.5, 0.5).unwrap(), 0.0);
    let no_history = SimulationGrid::new(1.0, 64, 0.0).unwrap();
    assert!(synthesize_fbm(&NoisePath::generate(1, &no_history), &hp).is_err());
}

#[test]
fn fbm_marginal_is_gaussian_with_the_right_local_variance() {
    let ens = Ensemble::new(SimulationGrid::new(1.0, 512, 8.0).unwrap(), 77, 4000);
    let hp = HurstParameter::new(0.75).unwrap();
    let r = verify_fbm_law(&hp, 1.0, 0.5, &ens).unwrap();
    assert!(r.shape.skewness.abs() <= 3.0 * r.skewness_se, "{:?}", r.shape);
    assert!(r.shape.excess_kurtosis.abs() <= 3.0 * r.kurtosis_se, "{:?}", r.shape);
    // E W_H(1)² = c_H²/(2H)
    assert!((r.w_variance.closed_form - hp.c_h().powi(2) / 1.5).abs() < 1e-14);
    assert!(r.w_variance.pass, "{:?}", r.w_variance);
    assert!(r.variance.pass && r.covariance.pass);
}

#[test]
fn path_csv_round_trips() {
    let g = SimulationGrid::new(1.0, 64, 1.0).unwrap();
    let noise = NoisePath::generate(21, &g);
    let hp = HurstParameter::new(0.75).unwrap();
    let p = synthesize_fbm(&noise, &hp).unwrap();
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rdr.headers().unwrap().get(1).unwrap(), "B_H[h=0.75;seed=21]");
    let back: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(back, p.values);
}
