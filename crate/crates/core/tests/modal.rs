use peh_core::femodel::{build_device, AssemblyOptions, DeviceModel, MaterialSet, MeshSettings};
use peh_core::geometry::ShapeParams;
use peh_core::modal::{rayleigh_ratio, solve_modes};

fn device(shape: ShapeParams, mats: &MaterialSet, mesh: MeshSettings) -> DeviceModel<f64> {
    build_device(&shape.expand().unwrap(), mats, &mesh, 1000.0, &AssemblyOptions::default()).unwrap()
}

fn fundamental(shape: ShapeParams, mats: &MaterialSet) -> f64 {
    let m = device(shape, mats, MeshSettings::default());
    solve_modes(&m, 1).unwrap().fundamental_hz()
}

#[test]
fn narrow_plate_follows_beam_frequency_ratio() {
    let shape = ShapeParams::new(0.3, 1.0, 0.2, 0.1, 1e-3).unwrap();
    let mesh = MeshSettings {
        degrees: (3, 3),
        elements: (16, 4),
    };
    let r = solve_modes(&device(shape, &MaterialSet::default(), mesh), 2).unwrap();
    let ratio = r.omega[1] / r.omega[0];
    let beam = (4.694_091f64 / 1.875_104).powi(2);
    assert!((ratio / beam - 1.0).abs() < 0.03, "{ratio} vs {beam}");
}

#[test]
fn stiffer_materials_raise_frequencies_by_square_root() {
    let shape = ShapeParams::square(0.25, 0.6, 0.3).unwrap();
    let base = MaterialSet::default();
    let a = solve_modes(&device(shape, &base, MeshSettings::default()), 6).unwrap();
    let b = solve_modes(&device(shape, &base.clone().scale_stiffness(4.0), MeshSettings::default()), 6).unwrap();
    for (wa, wb) in a.omega.iter().zip(&b.omega) {
        assert!((wb / wa - 2.0).abs() < 1e-10);
    }
}

#[test]
fn doubling_length_quarters_fundamental() {
    let mats = MaterialSet::default();
    let f_short = fundamental(ShapeParams::new(0.2, 0.5, 0.2, 0.5, 1e-3).unwrap(), &mats);
    let f_long = fundamental(ShapeParams::new(0.4, 0.5, 0.2, 0.5, 1e-3).unwrap(), &mats);
    assert!((f_short / f_long - 4.0).abs() < 0.02, "{}", f_short / f_long);
}

#[test]
fn modes_are_mass_normalized_and_orthogonal() {
    let m = device(ShapeParams::square(0.3, 0.45, 0.2).unwrap(), &MaterialSet::default(), MeshSettings::default());
    let r = solve_modes(&m, 8).unwrap();
    let mm = r.modes.transpose() * m.constrained_mass() * &r.modes;
    let kk = r.modes.transpose() * m.constrained_stiffness() * &r.modes;
    for i in 0..8 {
        assert!((mm[(i, i)] - 1.0).abs() < 1e-8);
        assert!((kk[(i, i)] / (r.omega[i] * r.omega[i]) - 1.0).abs() < 1e-8);
        for j in 0..8 {
            if i != j {
                assert!(mm[(i, j)].abs() < 1e-8);
                assert!(kk[(i, j)].abs() < 1e-8 * kk[(i, i)]);
            }
        }
    }
    assert!(r.omega.windows(2).all(|w| w[0] > 0.0 && w[1] > w[0]));
    let d = &m.materials.damping;
    for (w, z) in r.omega.iter().zip(&r.zeta) {
        assert_eq!(*z, rayleigh_ratio(d.alpha, d.beta, *w));
    }
}

#[test]
fn refinement_changes_fundamental_little() {
    let mats = MaterialSet::default();
    for x in [[0.1, 0.1, 0.05], [0.3, 0.5, 0.2], [0.5, 1.0, 0.45]] {
        let shape = ShapeParams::square(x[0], x[1], x[2]).unwrap();
        let coarse = solve_modes(&device(shape, &mats, MeshSettings::default()), 1).unwrap().fundamental_hz();
        let fine_mesh = MeshSettings {
            degrees: (3, 3),
            elements: (16, 16),
        };
        let fine = solve_modes(&device(shape, &mats, fine_mesh), 1).unwrap().fundamental_hz();
        assert!((coarse / fine - 1.0).abs() < 5e-3, "{x:?}: {coarse} vs {fine}");
    }
}

#[test]
fn single_precision_tracks_double() {
    let shape = ShapeParams::square(0.3, 0.5, 0.2).unwrap();
    let mats = MaterialSet::default();
    let m32 = build_device::<f32>(&shape.expand().unwrap(), &mats, &MeshSettings::default(), 1000.0, &AssemblyOptions::default()).unwrap();
    let f32_hz = solve_modes(&m32, 1).unwrap().fundamental_hz();
    let f64_hz = fundamental(shape, &mats);
    assert!((f32_hz / f64_hz - 1.0).abs() < 1e-3, "{f32_hz} vs {f64_hz}");
}
