use clm_core::profiles::sqrt_bump_field;
use clm_core::spectral::{Dealias, SpectralField};
use clm_core::sqrt_scheme::{conservation_check, picard_solve, trajectory_min, PicardOptions};

#[test]
fn disabling_dealiasing_degrades_conservation() {
    let f_in = sqrt_bump_field(2.0, 64);
    let mut opts = PicardOptions::new(0.5, 1e-3);
    let on = conservation_check(&picard_solve(&f_in, &opts).unwrap().trajectory);
    opts.dealias = Dealias::Off;
    let off = conservation_check(&picard_solve(&f_in, &opts).unwrap().trajectory);
    assert!(off.h1_drift > 10.0 * on.h1_drift, "{on:?} vs {off:?}");
    assert!(off.dtheta_drift > 10.0 * on.dtheta_drift);
}

#[test]
fn nonnegative_band_limited_data_stays_nonnegative() {
    let mut f_in = SpectralField::cos_mode(1, 1.0, 32);
    f_in.mean = 1.0;
    let out = picard_solve(&f_in, &PicardOptions::new(0.2, 1e-3)).unwrap();
    assert!(out.max_contraction_ratio() <= 0.5);
    let min = trajectory_min(&out.trajectory, 512);
    assert!(min >= -1e-10 * 2.0, "{min}");
}

#[test]
fn long_window_is_split_until_it_contracts() {
    let f_in = sqrt_bump_field(2.0, 32).scaled(3.0);
    let out = picard_solve(&f_in, &PicardOptions::new(2.0, 2e-3)).unwrap();
    assert!(out.windows.len() > 1);
    assert!(out.windows[0].halvings > 0);
    assert!(out.max_contraction_ratio() <= 0.5);
    let last = out.windows.last().unwrap();
    assert!((last.t_end - 2.0).abs() < 1e-12);
    assert_eq!(out.trajectory.len(), 1001);
}
