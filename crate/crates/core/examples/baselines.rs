//! Index lists produced by the conventional subsamplers and filter scores
//! on one dataset.

use amc_subsample::baselines::{
    filter_scores, magnitude_indices, pcs_indices, random_indices, uniform_indices, FilterMethod,
};
use amc_subsample::bench::Workbench;
use amc_subsample::sigstream::{generate_dataset, GenConfig};

fn main() -> amc_subsample::Result<()> {
    let ds = generate_dataset(&GenConfig {
        d: 32,
        shift: 16,
        snr_grid: vec![10],
        frames_per_class_per_snr: 40,
        seed: 2,
        ..GenConfig::default()
    })?;
    let wb = Workbench::new(&ds, 2, 0.25, 0.25)?;
    let side = wb.training_side();
    let (d, k) = (side.d, 8);

    println!("uniform    {:?}", uniform_indices(d, k)?);
    println!("random     {:?}", random_indices(d, k, 2)?);
    println!("magnitude  {:?} (first frame)", magnitude_indices(side.frame(0), k)?);
    let (pca, pcs) = pcs_indices(&side.x, d, k)?;
    println!(
        "pcs        {pcs:?} (top eigenvalue {:.3}, residual {:.1e})",
        pca.eigenvalues[0],
        pca.orthonormality_residual()
    );
    for m in [FilterMethod::Fisher, FilterMethod::Laplacian] {
        let t = filter_scores(&side, m)?;
        println!("{:<10} {:?}", m.to_string(), t.top_k(k)?);
    }
    Ok(())
}
