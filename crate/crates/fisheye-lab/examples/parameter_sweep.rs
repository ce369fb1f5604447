//! Sweep each distortion coefficient across its useful range and tile the
//! results into montages.
//!
//! The single-coefficient montage varies k1 from -0.9 to 1.0 while the other
//! coefficients hold at the baseline; inadmissible combinations (polynomial
//! not strictly increasing over the field of view) render as blank cells and
//! are flagged in the cell records.

use fisheye_lab::presets::{
    adapt_to_size, find_preset, sweep_all_parameters, sweep_parameter, SweepSpec,
    DEFAULT_SWEEP_HI, DEFAULT_SWEEP_LO, DEFAULT_SWEEP_STEPS,
};
use fisheye_lab::testimage::test_scene;
use fisheye_lab::warp::save_image;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::PathBuf::from("target/examples");
    std::fs::create_dir_all(&out)?;

    let scene = test_scene(192, 192);
    let baseline = adapt_to_size(
        &find_preset("fullframe-2")?.params,
        scene.width,
        scene.height,
    );

    let spec = SweepSpec::standard(1, baseline.clone());
    let single = sweep_parameter(&spec, &scene)?;
    save_image(&single.montage, &out.join("sweep_k1.png"))?;
    let blank = single.cells.iter().filter(|c| !c.admissible).count();
    println!(
        "k1 sweep: {} cells from {} to {}, {} inadmissible",
        single.cells.len(),
        spec.lo,
        spec.hi,
        blank
    );
    for cell in &single.cells {
        println!(
            "  k1 = {:>6.3}  {}",
            cell.value,
            if cell.admissible { "ok" } else { "out of range" }
        );
    }

    let all = sweep_all_parameters(
        &baseline,
        DEFAULT_SWEEP_LO,
        DEFAULT_SWEEP_HI,
        DEFAULT_SWEEP_STEPS,
        &scene,
    )?;
    save_image(&all.montage, &out.join("sweep_all.png"))?;
    println!(
        "full sweep: 5 rows of {} cells, montage {}x{}",
        all.cells.len() / 5,
        all.montage.width,
        all.montage.height
    );
    println!("wrote sweep_k1.png and sweep_all.png to {}", out.display());
    Ok(())
}
