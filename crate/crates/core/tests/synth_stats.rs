use statrs::distribution::{ChiSquared, ContinuousCDF};

use crowdsplit::density::Reduction;
use crowdsplit::partition::partition;
use crowdsplit::synth::{generate_scene, oracle_predictions, NoiseSpec, SynthSpec};
use crowdsplit::Region;

#[test]
fn uniform_placement_passes_chi_square() {
    const BINS: usize = 4;
    let mut counts = [0usize; BINS * BINS];
    for seed in 0..50 {
        let spec = SynthSpec::new(320, 240, 30, 10_000 + seed);
        let rec = generate_scene(&spec).unwrap();
        let (x0, x1) = (0.5, spec.width as f64 - 0.5);
        let (y0, y1) = (spec.horizon_y, spec.height as f64 - 0.5);
        for h in &rec.heads {
            let bx = (((h.x - x0) / (x1 - x0)) * BINS as f64) as usize;
            let by = (((h.y - y0) / (y1 - y0)) * BINS as f64) as usize;
            counts[by.min(BINS - 1) * BINS + bx.min(BINS - 1)] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new((counts.len() - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(
        stat < critical,
        "chi-square {stat:.2} >= {critical:.2} with counts {counts:?}"
    );
}

#[test]
fn clustering_concentrates_heads_in_far_band() {
    let far_share = |c: f64| {
        let mut far = 0;
        let mut all = 0;
        for seed in 0..10 {
            let spec = SynthSpec {
                clustering_intensity: c,
                ..SynthSpec::new(320, 240, 80, 300 + seed)
            };
            let rec = generate_scene(&spec).unwrap();
            let poly = rec.config.polyline.as_ref().unwrap();
            far += rec.heads.iter().filter(|h| h.y < poly.eval(h.x).unwrap()).count();
            all += rec.heads.len();
        }
        far as f64 / all as f64
    };
    assert!(far_share(3.0) > far_share(0.0) + 0.2);
}

#[test]
fn miss_rate_matches_binomial() {
    let mut near_counts = Vec::new();
    for seed in 0..200 {
        let spec = SynthSpec {
            spacing_factor: 0.3,
            ..SynthSpec::new(640, 480, 260, 20_000 + seed)
        };
        let mut rec = generate_scene(&spec).unwrap();
        let part = partition(&rec.depth, &rec.config).unwrap();
        // keep exactly 100 near heads and nothing else
        rec.heads.retain(|h| part.mask.label_at(h.x, h.y) == Some(Region::Near));
        assert!(rec.heads.len() >= 100, "seed {seed}: only {} near heads", rec.heads.len());
        rec.heads.truncate(100);
        let noise = NoiseSpec {
            miss_rate: 0.2,
            ..NoiseSpec::default()
        };
        let o = oracle_predictions(&rec, &part, &spec, &noise, Reduction::Ordered).unwrap();
        assert_eq!(o.near_heads, 100);
        near_counts.push(o.detections.len() as f64);
    }
    let mean = near_counts.iter().sum::<f64>() / near_counts.len() as f64;
    let sd = (100.0f64 * 0.2 * 0.8).sqrt();
    assert!((mean - 80.0).abs() <= 3.0 * sd, "mean {mean}");
    // the mean of 200 scenes is far tighter than a single scene
    assert!((mean - 80.0).abs() <= 3.0 * sd / 200f64.sqrt(), "mean {mean}");
}

#[test]
fn noisy_outputs_are_seeded() {
    let spec = SynthSpec::new(200, 150, 50, 77);
    let rec = generate_scene(&spec).unwrap();
    let part = partition(&rec.depth, &rec.config).unwrap();
    let noise = NoiseSpec {
        miss_rate: 0.3,
        false_positive_rate: 4.0,
        box_jitter: 1.5,
        density_noise_sigma: 1e-3,
    };
    let a = oracle_predictions(&rec, &part, &spec, &noise, Reduction::Ordered).unwrap();
    let b = oracle_predictions(&rec, &part, &spec, &noise, Reduction::Ordered).unwrap();
    assert_eq!(a, b);
    assert!(a.density.values().iter().all(|&v| v >= 0.0));
}
