use pixel_rcnn::data::{
    assemble_dataset, pca_project, synth_generate, BandStack, LabelMask, PixelDataset, SynthSpec, REFERENCE_LAND_COVER,
    REFERENCE_TOTAL,
};
use pixel_rcnn::training::{amsgrad_step, stratified_indices, AmsGradConfig, AmsGradState, ScalerParams};
use pixel_rcnn::{RngState, Tensor};
use proptest::prelude::*;

fn stacks(t: usize, h: usize, w: usize, rng: &mut RngState) -> Vec<BandStack> {
    (0..t)
        .map(|k| {
            let mut grid = || (0..h * w).map(|_| rng.uniform(0.0, 1.0) as f32).collect::<Vec<_>>();
            BandStack {
                date: format!("2015-{:02}-01", k + 1),
                height: h,
                width: w,
                blue: grid(),
                green: grid(),
                red: grid(),
                nir: grid(),
            }
        })
        .collect()
}

#[test]
fn reference_scene_geometry() {
    let (h, w) = (320, 320);
    let mut rng = RngState::new(4);
    let mut cells = vec![None; h * w];
    let mut free = (0..h * w).filter(|i| i % 10 != 9);
    for (class, (_, n)) in REFERENCE_LAND_COVER.iter().enumerate() {
        for _ in 0..*n {
            cells[free.next().unwrap()] = Some(class);
        }
    }
    let classes = REFERENCE_LAND_COVER.iter().map(|(name, _)| name.to_string()).collect();
    let mask = LabelMask { height: h, width: w, cells, classes };
    let d = assemble_dataset(&stacks(9, h, w, &mut rng), &mask).unwrap();
    assert_eq!(d.shape(), [REFERENCE_TOTAL, 9, 5]);
    let counts: Vec<usize> = REFERENCE_LAND_COVER.iter().map(|(_, n)| *n).collect();
    assert_eq!(d.class_counts(), counts);
}

fn random_dataset(n: usize, seed: u64) -> PixelDataset {
    let mut rng = RngState::new(seed);
    let x = Tensor::from_fn(&[n, 3, 2], |_| rng.normal() as f32);
    let labels = (0..n).map(|i| i % 3).collect();
    PixelDataset::new(x, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assembled_samples_match_labelled_cells(h in 1usize..12, w in 1usize..12, t in 1usize..5, seed in 0u64..1000) {
        let mut rng = RngState::new(seed);
        let cells: Vec<Option<usize>> =
            (0..h * w).map(|_| if rng.uniform(0.0, 1.0) < 0.6 { Some(rng.uniform(0.0, 2.0) as usize) } else { None }).collect();
        let labelled = cells.iter().flatten().count();
        let mask = LabelMask { height: h, width: w, cells, classes: vec!["x".into(), "y".into()] };
        match assemble_dataset(&stacks(t, h, w, &mut rng), &mask) {
            Ok(d) => prop_assert_eq!(d.shape(), [labelled, t, 5]),
            Err(_) => prop_assert_eq!(labelled, 0),
        }
    }

    #[test]
    fn pca_ratios_ignore_sample_order(seed in 0u64..1000) {
        let d = random_dataset(40, seed);
        let mut order: Vec<usize> = (0..40).collect();
        RngState::new(seed + 1).shuffle(&mut order);
        let shuffled = d.subset(&order).unwrap();
        let a = pca_project(&d, 2).unwrap();
        let b = pca_project(&shuffled, 2).unwrap();
        for (x, y) in a.all_ratios.iter().zip(&b.all_ratios) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_twice_changes_nothing(seed in 0u64..1000) {
        let d = random_dataset(30, seed);
        let once = ScalerParams::fit(&d).apply(&d).unwrap();
        let twice = ScalerParams::fit(&once).apply(&once).unwrap();
        for (a, b) in once.x().data().iter().zip(twice.x().data()) {
            prop_assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn split_is_a_stratified_partition(seed in 0u64..1000, frac in 0.1f64..0.9) {
        let d = random_dataset(31, seed);
        let (train, test) = stratified_indices(&d, frac, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..31).collect::<Vec<_>>());
        let tr = d.subset(&train).unwrap().class_counts();
        for (k, &n) in d.class_counts().iter().enumerate() {
            prop_assert!((tr[k] as f64 - n as f64 * frac).abs() <= 1.0);
        }
    }

    #[test]
    fn amsgrad_second_moment_never_shrinks(grads in prop::collection::vec(-100.0f64..100.0, 1..40)) {
        let mut p = Tensor::<f64>::vector(vec![0.0, 1.0]);
        let mut state = AmsGradState::new(&[&p]);
        let mut prev = vec![0.0; 2];
        for g in grads {
            let grad = Tensor::vector(vec![g, -g / 3.0]);
            amsgrad_step(&mut state, &mut [&mut p], &[&grad], 1e-3, &AmsGradConfig::default()).unwrap();
            let now = state.v_hat[0].data().to_vec();
            prop_assert!(now.iter().zip(&prev).all(|(a, b)| a >= b));
            prop_assert!(p.data().iter().all(|v| v.is_finite()));
            prev = now;
        }
    }
}

#[test]
fn synthetic_reference_split_keeps_every_class() {
    let d = synth_generate(&SynthSpec::reference_proportions(2000, 0.1, 9)).unwrap();
    let (train, test) = stratified_indices(&d, 0.6, 9).unwrap();
    let tr = d.subset(&train).unwrap().class_counts();
    let te = d.subset(&test).unwrap().class_counts();
    assert!(tr.iter().zip(&te).all(|(a, b)| *a > 0 && *b > 0));
}
