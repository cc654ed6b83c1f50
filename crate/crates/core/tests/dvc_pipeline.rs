//! Displacement tracking on generated phantoms against the warps that
//! produced them.

use onh_core::cohort::{
    aligned_cloud, generate_phantom, generate_subject, subject_seed, truth_cloud, warp_volume, CohortSpec,
    Displacement,
};
use onh_core::dvc::{block_match, effective_strain, track, BlockMatchParams, DvcConfig};
use onh_core::geometry::{DEFAULT_CROP_RADIUS_MM, DEFAULT_RESAMPLE_POINTS};
use onh_core::LabeledVolume;

fn phantom_baseline(index: usize) -> LabeledVolume {
    let spec = CohortSpec::default();
    generate_phantom(&spec, subject_seed(&spec, index)).unwrap().baseline
}

fn voxels_to_mm(vol: &LabeledVolume, v: [f64; 3]) -> [f64; 3] {
    let s = vol.spacing();
    [v[0] * s[0], v[1] * s[1], v[2] * s[2]]
}

#[test]
fn subvoxel_translation_is_recovered_at_interior_nodes() {
    let vol = phantom_baseline(11);
    let shift = [0.25, -0.4, 0.3];
    let moved = warp_volume(&vol, &Displacement::Translation { mm: voxels_to_mm(&vol, shift) }).unwrap();
    let f = block_match(&vol, &moved, &BlockMatchParams::default()).unwrap();
    // edge blocks overlap the strip the warp fills with zeros
    let interior: Vec<usize> = (0..f.grid.len()).filter(|&i| f.grid.is_interior(i, 1)).collect();
    let mut sq = 0.0;
    for &i in &interior {
        let v = f.vectors[i];
        for a in 0..3 {
            let e = v[a] - shift[a];
            assert!(e.abs() < 0.25, "{v:?}");
            sq += e * e;
        }
    }
    let rms = (sq / interior.len() as f64).sqrt();
    assert!(rms < 0.05, "rms {rms}");
}

#[test]
fn integer_translation_is_exact_and_equivariant() {
    let vol = phantom_baseline(5);
    let params = BlockMatchParams { search: 3, ..BlockMatchParams::default() };
    let a = [1.0, -1.0, 2.0];
    let once = warp_volume(&vol, &Displacement::Translation { mm: voxels_to_mm(&vol, a) }).unwrap();
    let f = block_match(&vol, &once, &params).unwrap();
    assert!(f.vectors.iter().all(|v| *v == a));
    // tracking a shifted pair is unchanged by a further common shift of both
    let b = [-1.0, 0.0, 1.0];
    let both =
        |v: &LabeledVolume| warp_volume(v, &Displacement::Translation { mm: voxels_to_mm(v, b) }).unwrap();
    let g = block_match(&both(&vol), &both(&once), &params).unwrap();
    let interior: Vec<usize> = (0..g.grid.len()).filter(|&i| g.grid.is_interior(i, 1)).collect();
    assert!(interior.iter().all(|&i| g.vectors[i] == a));
}

#[test]
fn uniform_shear_through_the_strain_pipeline() {
    let vol = phantom_baseline(2);
    let gamma = 0.008;
    let centre = vol.voxel_to_mm(32, 32, 24);
    let shear = Displacement::Affine {
        gradient: [[0.0, gamma, 0.0], [gamma, 0.0, 0.0], [0.0; 3]],
        origin_mm: centre,
    };
    let (_, strain) = track(&vol, &warp_volume(&vol, &shear).unwrap(), &DvcConfig::default()).unwrap();
    let nodes: Vec<usize> = (0..strain.grid.len()).filter(|&i| strain.grid.is_interior(i, 2)).collect();
    let n = nodes.len() as f64;
    let mean_xy = nodes.iter().map(|&i| strain.tensors[i].xy).sum::<f64>() / n;
    let mean_xx = nodes.iter().map(|&i| strain.tensors[i].xx).sum::<f64>() / n;
    assert!((mean_xy - gamma).abs() < 5e-4, "xy {mean_xy}");
    assert!(mean_xx.abs() < 5e-4, "xx {mean_xx}");
    // pure shear of this size: 2/sqrt(3) * gamma
    let want = 2.0 / 3f64.sqrt() * gamma;
    let mean_eff = nodes.iter().map(|&i| strain.effective[i]).sum::<f64>() / n;
    assert!((mean_eff - want).abs() < 1.5e-3, "effective {mean_eff} vs {want}");
}

#[test]
fn measured_strain_tracks_the_planted_load() {
    let spec = CohortSpec::default();
    let rec = generate_subject(&spec, 4).unwrap();
    let ph = &rec.phantom;
    let (_, strain) = track(&ph.baseline, &ph.deformed, &DvcConfig::default()).unwrap();
    let nodes: Vec<usize> = (0..strain.grid.len()).filter(|&i| strain.grid.is_interior(i, 2)).collect();
    let truth: Vec<f64> =
        nodes.iter().map(|&i| effective_strain(&ph.load.strain_at_mm(&strain.node_mm(i)))).collect();
    let measured: Vec<f64> = nodes.iter().map(|&i| strain.effective[i]).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mt, mm) = (mean(&truth), mean(&measured));
    let cov: f64 = truth.iter().zip(&measured).map(|(t, m)| (t - mt) * (m - mm)).sum();
    let var_t: f64 = truth.iter().map(|t| (t - mt).powi(2)).sum();
    let var_m: f64 = measured.iter().map(|m| (m - mm).powi(2)).sum();
    let r = cov / (var_t * var_m).sqrt();
    assert!(r > 0.9, "correlation {r}");
    assert!((mm - mt).abs() < 0.25 * mt, "mean measured {mm} vs truth {mt}");
}

#[test]
fn default_extraction_supports_full_resampling() {
    let spec = CohortSpec::default();
    for index in [0, 1] {
        let rec = generate_subject(&spec, index).unwrap();
        let (cloud, _) =
            aligned_cloud(&rec.phantom.baseline, &rec.phantom.bmo_ring, DEFAULT_CROP_RADIUS_MM).unwrap();
        assert!(cloud.len() >= DEFAULT_RESAMPLE_POINTS, "subject {index}: {} points", cloud.len());
        let truth = truth_cloud(&rec.phantom, DEFAULT_CROP_RADIUS_MM).unwrap();
        assert_eq!(truth.len(), cloud.len());
        assert!(cloud.points().iter().all(|p| p.x.hypot(p.y) <= DEFAULT_CROP_RADIUS_MM));
    }
}
