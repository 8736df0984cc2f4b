use audiovat::audio::{encode_wav_pcm16, extract_features, AudioConfig};
use audiovat::image::{read_pgm, write_pgm};
use audiovat::store::{read_features, write_features};
use audiovat::synth::{block_dissim, gaussian_blobs, BlobSpec, SplitMix64};
use audiovat::vat::vat;
use audiovat::{
    cce_count, euclidean_dissim, odi_from, permute_matrix, vat_order, CceConfig,
    DissimilarityMatrix, FeatureMatrix, Permutation,
};
use proptest::prelude::*;

fn shuffled(n: usize, seed: u64) -> Permutation {
    let mut rng = SplitMix64::new(seed);
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
    }
    Permutation::new(p).unwrap()
}

#[test]
fn shuffled_blocks_count_three() {
    let m = block_dissim(&[10, 10, 10], 0.0, 1.0).unwrap();
    for seed in 0..20 {
        let p = permute_matrix(&m, &shuffled(30, seed)).unwrap();
        let (_, img) = vat(&p).unwrap();
        let r = cce_count(&img, &CceConfig::default()).unwrap();
        assert_eq!(r.cluster_count, 3, "seed {seed}");
    }
}

fn features() -> impl Strategy<Value = FeatureMatrix> {
    (2usize..24, 1usize..5).prop_flat_map(|(n, d)| {
        proptest::collection::vec(-100.0f64..100.0, n * d)
            .prop_map(move |v| FeatureMatrix::new(n, d, v).unwrap())
    })
}

proptest! {
    #[test]
    fn odi_invariants(f in features()) {
        let m = euclidean_dissim(&f);
        let o = vat_order(&m);
        let img = odi_from(&m, &o).unwrap();
        let n = m.n();
        let dmax = m.max();
        for i in 0..n {
            prop_assert_eq!(img.pixel(i, i), 0);
            for j in 0..n {
                prop_assert_eq!(img.pixel(i, j), img.pixel(j, i));
                let d = m.get(o.order[i], o.order[j]);
                let want = if dmax > 0.0 { (255.0 * d / dmax).round() as u8 } else { 0 };
                prop_assert_eq!(img.pixel(i, j), want);
            }
        }
        prop_assert_eq!(o.link_dist[0], 0.0);
    }

    #[test]
    fn image_is_invariant_to_input_order(f in features(), seed in any::<u64>()) {
        // random real coordinates make ties improbable, so the VAT path is unique
        let m = euclidean_dissim(&f);
        let p = shuffled(m.n(), seed);
        let (o1, a) = vat(&m).unwrap();
        let (o2, b) = vat(&permute_matrix(&m, &p).unwrap()).unwrap();
        let mst1: f64 = o1.link_dist.iter().sum();
        let mst2: f64 = o2.link_dist.iter().sum();
        prop_assert!((mst1 - mst2).abs() <= 1e-9 * mst1.max(1.0));
        let mut h1 = a.histogram();
        let mut h2 = b.histogram();
        h1.sort();
        h2.sort();
        prop_assert_eq!(h1, h2);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (f, _) = gaussian_blobs(&BlobSpec {
        c: 4,
        n_per: 60,
        dim: 8,
        sep: 6.0,
        sigma: 1.0,
        seed: 9,
    })
    .unwrap();
    let run = |threads: usize| -> (DissimilarityMatrix, Vec<u8>) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let m = euclidean_dissim(&f);
                let (_, img) = vat(&m).unwrap();
                (m, img.pixels().to_vec())
            })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn features_through_files_to_image() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = AudioConfig {
        n_mels: 32,
        ..Default::default()
    };
    let fb = cfg.filterbank().unwrap();
    let rows: Vec<Vec<f64>> = [300.0, 310.0, 2000.0, 2050.0]
        .iter()
        .map(|&freq| {
            let x: Vec<f64> = (0..11025)
                .map(|i| 0.4 * (2.0 * std::f64::consts::PI * freq * i as f64 / 22050.0).sin())
                .collect();
            extract_features(&encode_wav_pcm16(&x, 1, 22050), &cfg, &fb).unwrap()
        })
        .collect();
    let f = FeatureMatrix::from_rows(&rows).unwrap();
    let fpath = dir.path().join("f.vatf");
    write_features(&fpath, &f).unwrap();
    let back = read_features(&fpath).unwrap();
    assert_eq!(back, f);

    let (o, img) = vat(&euclidean_dissim(&back)).unwrap();
    let ipath = dir.path().join("odi.pgm");
    write_pgm(&img, &ipath).unwrap();
    assert_eq!(read_pgm(&ipath).unwrap(), img);
    // the two low tones and the two high tones end up adjacent
    let pos = o.order.inverse();
    assert_eq!(pos[0].abs_diff(pos[1]), 1);
    assert_eq!(pos[2].abs_diff(pos[3]), 1);
}
