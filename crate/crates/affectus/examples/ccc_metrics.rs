//! Score predictions with the concordance correlation coefficient.
//!
//! CCC is the headline metric for continuous affect: it is Pearson
//! correlation additionally penalized for mean and scale disagreement, so
//! a predictor cannot score well by tracking the shape of the trace while
//! sitting at the wrong level or amplitude.

use affectus::metrics::{ccc, ccc_partition, evaluate, pearson, PartitionPooling};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth: Vec<f64> = (0..400).map(|t| (t as f64 * 0.05).sin() * 0.6).collect();

    let perfect = truth.clone();
    let shifted: Vec<f64> = truth.iter().map(|v| v + 0.5).collect();
    let shrunk: Vec<f64> = truth.iter().map(|v| v * 0.3).collect();
    let inverted: Vec<f64> = truth.iter().map(|v| -v).collect();

    println!("{:<18} {:>8} {:>10}", "prediction", "ccc", "pearson r");
    for (name, pred) in [
        ("identical", &perfect),
        ("mean offset +0.5", &shifted),
        ("amplitude x0.3", &shrunk),
        ("sign flipped", &inverted),
    ] {
        println!("{name:<18} {:>8.3} {:>10.3}", ccc(pred, &truth)?, pearson(pred, &truth)?);
    }
    assert_eq!(ccc(&perfect, &truth)?, 1.0, "self-agreement is exactly 1");

    // Pearson forgives the offset and the shrink; CCC does not.
    assert!(pearson(&shifted, &truth)? > 0.999 && ccc(&shifted, &truth)? < 0.6);

    let result = evaluate(&shifted, &truth)?;
    println!(
        "\nevaluate() bundles them: ccc {:.3}, sse {:.1}, r {:.3}, n {}",
        result.ccc, result.sse, result.pearson_r, result.n
    );

    // Partition scores pool all subjects into one concatenated trace, so
    // a per-subject bias hurts even when each subject alone looks fine.
    let subject_a = (truth.clone(), truth.clone());
    let subject_b: (Vec<f64>, Vec<f64>) =
        (truth.iter().map(|v| v + 0.8).collect(), truth.clone());
    let pooled = ccc_partition(&[subject_a, subject_b], PartitionPooling::Concatenated)?;
    println!("two subjects, one biased: pooled ccc {pooled:.3}");
    Ok(())
}
