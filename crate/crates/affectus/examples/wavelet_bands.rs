//! Decompose a window into wavelet bands and reconstruct it.
//!
//! The feature extractor summarizes each window with db10 detail and
//! approximation bands. This example shows the decomposition on a signal
//! with a slow sweep plus a short high-frequency burst: the burst energy
//! lands in the fine detail bands, the sweep in the approximation, and
//! the inverse transform restores the input to near machine precision.

use affectus::wavelet::{
    band_feature_names, band_features, dwt, idwt, max_levels, WaveletConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 200;
    let signal: Vec<f64> = (0..n)
        .map(|t| {
            let slow = (t as f64 * 0.05).sin();
            let burst = if (80..100).contains(&t) { 0.5 * (t as f64 * 2.2).sin() } else { 0.0 };
            slow + burst
        })
        .collect();

    let config = WaveletConfig::default(); // db10
    let levels = max_levels(n, config.filter_length())?;
    println!("{} samples, filter length {}, max levels {}", n, config.filter_length(), levels);

    let decomp = dwt(&signal, levels, &config)?;
    for (i, band) in decomp.bands().enumerate() {
        let label = if i < decomp.levels() { format!("d{}", i + 1) } else { format!("a{}", decomp.levels()) };
        let rms = (band.iter().map(|v| v * v).sum::<f64>() / band.len() as f64).sqrt();
        println!("band {label:<3} {} coefficients, rms {rms:.4}", band.len());
    }

    let rebuilt = idwt(&decomp)?;
    let max_err = signal
        .iter()
        .zip(&rebuilt)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("reconstruction error: {max_err:.2e}");
    assert!(max_err < 1e-9, "analysis/synthesis must round-trip");

    // The per-band summary used as window features.
    let names = band_feature_names(levels);
    let features = band_features(&decomp);
    println!("\nfirst band's features:");
    for (name, value) in names.iter().zip(&features).take(5) {
        println!("  {name:<8} {value:+.4}");
    }
    Ok(())
}
