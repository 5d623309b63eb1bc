//! Averages the periodogram of jittered points and writes the spectrum
//! image and radial profile next to the working directory.
//!
//! Usage: `spectrum_analysis [sampler] [out_prefix]`

use std::path::PathBuf;

use samplecraft::analysis::{analyze, export_spectrum_image, AnalysisOptions, Source};
use samplecraft::io::write_radial_csv;
use samplecraft::losses::{default_bins, PcfSettings};
use samplecraft::Sampler;

fn main() -> samplecraft::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let sampler: Sampler = args.first().map(String::as_str).unwrap_or("jittered").parse()?;
    let prefix = PathBuf::from(args.get(1).map(String::as_str).unwrap_or("spectrum"));
    let opts = AnalysisOptions {
        trials: 32,
        count: 256,
        dim: 2,
        extent: 32,
        bins: default_bins(32, 2),
        pcf: PcfSettings::default_for(2),
        task_count: 64,
        star_probes: 64,
        seed: 1,
    };
    let report = analyze(&Source::Sampler(sampler), &opts)?;
    export_spectrum_image(&report.spectrum, &prefix.with_extension("pgm"))?;
    write_radial_csv(std::fs::File::create(prefix.with_extension("csv"))?, &report.profile)?;
    for bin in report.profile.bins.iter().take(8) {
        if let (Some(mean), Some(aniso)) = (bin.mean, bin.anisotropy) {
            println!("({:5.2}, {:5.2}]  power {mean:.3}  anisotropy {aniso:.3}", bin.lo, bin.hi);
        }
    }
    println!("generalised discrepancy {:.3e}", report.discrepancy);
    Ok(())
}
