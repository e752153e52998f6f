use msm_core::dataio::*;
use msm_core::matrix::Matrix;
use msm_core::rng::RngStream;
use msm_core::Error;
use proptest::prelude::*;

fn quantized_image(w: usize, h: usize, seed: u64) -> ImageGray {
    let mut rng = RngStream::new(seed, 0);
    let pixels = (0..w * h)
        .map(|_| rng.draw_index(256).unwrap() as f64 / 255.0)
        .collect();
    ImageGray::new(w, h, pixels).unwrap()
}

fn sample(image: ImageGray, label: &str) -> DialectSample {
    DialectSample::new(label, image, "test").unwrap()
}

#[test]
fn pgm_round_trips_exactly_on_grey_levels() {
    for seed in 0..20 {
        let img = quantized_image(1 + seed as usize % 7, 1 + seed as usize % 5, seed);
        for fmt in [ImageFormat::PgmAscii, ImageFormat::PgmBinary] {
            let back = parse_pgm(&encode_image(&img, fmt)).unwrap();
            assert_eq!(back, img, "{fmt:?}");
        }
    }
}

#[test]
fn pgm_files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let img = quantized_image(9, 4, 3);
    for (name, fmt) in [("a.pgm", ImageFormat::PgmBinary), ("b.pgm", ImageFormat::PgmAscii), ("c.csv", ImageFormat::Csv)] {
        let path = dir.path().join(name);
        save_image(&img, &path, fmt).unwrap();
        assert_eq!(load_image_auto(&path).unwrap(), img);
    }
    let missing = load_image_auto(&dir.path().join("none.pgm")).unwrap_err();
    assert!(missing.is_io());
    assert!(matches!(load_image_auto(&dir.path().join("x.png")), Err(Error::UnsupportedFormat(_))));
}

#[test]
fn pgm_rejects_wide_samples() {
    assert!(matches!(parse_pgm(b"P2\n1 1\n1000\n7\n"), Err(Error::UnsupportedFormat(_))));
    assert!(parse_pgm(b"P6\n1 1\n255\n\x00\x00\x00").is_err());
}

proptest! {
    #[test]
    fn pgm_quantizes_within_half_a_level(pixels in prop::collection::vec(0.0..=1.0f64, 12)) {
        let img = ImageGray::new(4, 3, pixels).unwrap();
        let back = parse_pgm(&encode_image(&img, ImageFormat::PgmBinary)).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            prop_assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact(values in prop::collection::vec(-1e6..1e6f64, 1..40), cols in 1usize..5) {
        let rows = values.len().div_ceil(cols);
        let mut v = values.clone();
        v.resize(rows * cols, 0.125);
        let m = Matrix::new(rows, cols, v).unwrap();
        let back = parse_csv_matrix(&format_csv_matrix(&m)).unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn roi_never_grows_and_is_idempotent(seed: u64, t in 0.05..0.95f64) {
        let img = quantized_image(7, 6, seed);
        match roi_extract(&img, t, Polarity::DarkOnLight) {
            Ok(a) => {
                prop_assert!(a.width() <= img.width() && a.height() <= img.height());
                prop_assert_eq!(roi_extract(&a, t, Polarity::DarkOnLight).unwrap(), a);
            }
            Err(e) => prop_assert!(matches!(e, Error::NoForeground(_))),
        }
    }
}

#[test]
fn csv_parse_errors() {
    assert!(matches!(parse_csv_matrix("1,2\n3\n"), Err(Error::Parse(_))));
    assert!(matches!(parse_csv_matrix("1,x\n"), Err(Error::Parse(_))));
    assert!(parse_csv_matrix("").is_err());
}

#[test]
fn roi_on_thousand_glyphs() {
    let glyphs = synth_glyphs(99, 1000, 28, (1, 4)).unwrap();
    for g in &glyphs {
        let once = roi_extract(&g.image, DEFAULT_THRESHOLD, Polarity::DarkOnLight).unwrap();
        let twice = roi_extract(&once, DEFAULT_THRESHOLD, Polarity::DarkOnLight).unwrap();
        assert_eq!(once, twice, "{}", g.label);
        assert!(once.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
    }
}

#[test]
fn roi_polarity_and_threshold() {
    let img = ImageGray::new(3, 3, vec![1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
    let dark = roi_extract(&img, 0.5, Polarity::DarkOnLight).unwrap();
    assert_eq!((dark.width(), dark.height(), dark.pixels()), (1, 1, &[0.0][..]));
    let light = roi_extract(&img, 0.5, Polarity::LightOnDark).unwrap();
    assert_eq!((light.width(), light.height()), (3, 3));
    let blank = ImageGray::filled(4, 4, 1.0).unwrap();
    assert!(matches!(roi_extract(&blank, 0.5, Polarity::DarkOnLight), Err(Error::NoForeground(_))));
    assert!(matches!(roi_extract(&img, 1.5, Polarity::DarkOnLight), Err(Error::InvalidRange(_))));
}

#[test]
fn concat_regions_match_sources() {
    let a = quantized_image(4, 5, 1);
    let b = quantized_image(4, 5, 2);
    let out = concat_sequence(&[sample(a.clone(), "a"), sample(b.clone(), "b")]).unwrap();
    assert_eq!((out.width(), out.height()), (8, 5));
    for r in 0..5 {
        for c in 0..4 {
            assert_eq!(out.get(r, c), a.get(r, c));
            assert_eq!(out.get(r, 4 + c), b.get(r, c));
        }
    }

    let short = quantized_image(3, 4, 3);
    let tall = quantized_image(2, 6, 4);
    let out = concat_sequence(&[sample(short.clone(), "s"), sample(tall.clone(), "t")]).unwrap();
    assert_eq!((out.width(), out.height()), (5, 6));
    for c in 0..3 {
        assert_eq!(out.get(0, c), BACKGROUND);
        assert_eq!(out.get(5, c), BACKGROUND);
        for r in 0..4 {
            assert_eq!(out.get(1 + r, c), short.get(r, c));
        }
    }
    for r in 0..6 {
        for c in 0..2 {
            assert_eq!(out.get(r, 3 + c), tall.get(r, c));
        }
    }

    let odd = concat_sequence(&[sample(quantized_image(1, 3, 5), "o"), sample(tall, "t")]).unwrap();
    assert_eq!(odd.get(0, 0), BACKGROUND);
    assert_eq!(odd.get(4, 0), BACKGROUND);
    assert_eq!(odd.get(5, 0), BACKGROUND);

    assert!(matches!(concat_sequence(&[sample(a, "a")]), Err(Error::InsufficientSamples(1))));
}

#[test]
fn glyphs_are_deterministic_and_dark_on_light() {
    let g = synth_glyphs(3, 3, 28, (2, 5)).unwrap();
    assert_eq!(g, synth_glyphs(3, 3, 28, (2, 5)).unwrap());
    assert_ne!(g, synth_glyphs(4, 3, 28, (2, 5)).unwrap());
    for (i, s) in g.iter().enumerate() {
        assert_eq!(s.label, format!("synth-{i}"));
        assert_eq!((s.image.width(), s.image.height()), (28, 28));
        assert!(s.image.pixels().iter().all(|&p| p == 0.0 || p == 1.0));
        assert!(s.image.pixels().iter().filter(|&&p| p == 0.0).count() >= 1);
    }
    assert!(matches!(synth_glyphs(3, 1, 7, (1, 2)), Err(Error::InvalidRange(_))));
    assert!(matches!(synth_glyphs(3, 0, 8, (1, 2)), Err(Error::InvalidRange(_))));
}

#[test]
fn normalization_spans_unit_interval() {
    let img = ImageGray::new(2, 2, vec![0.2, 0.4, 0.6, 0.3]).unwrap();
    let n = normalize_minmax(&img);
    assert_eq!(n.pixels().iter().copied().fold(f64::INFINITY, f64::min), 0.0);
    assert_eq!(n.pixels().iter().copied().fold(0.0, f64::max), 1.0);
    assert_eq!(normalize_minmax(&ImageGray::filled(2, 2, 0.7).unwrap()).pixels(), &[0.0; 4]);
    let m = Matrix::new(1, 3, vec![-2.0, 0.0, 2.0]).unwrap();
    assert_eq!(matrix_to_display_image(&m).pixels(), &[0.0, 0.5, 1.0]);
}

#[test]
fn image_matrix_layout() {
    let img = ImageGray::new(3, 2, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
    let m = img.to_matrix();
    assert_eq!(m.shape(), (2, 3));
    assert_eq!(m.get(1, 0), 0.3);
    assert_eq!(ImageGray::from_matrix(&m).unwrap(), img);
    assert!(ImageGray::new(2, 1, vec![0.5, 1.5]).is_err());
}
