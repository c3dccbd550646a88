//! Feature extraction at the tap point of each preset, from a whole image
//! and from a patch around a pixel.
//!
//! cargo run --release --example tap_features

use matbench::network::{all_presets, extract_patch, Network, NetworkSpec, Tensor};
use matbench::rng::SplitMix64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SplitMix64::new(1);
    for spec in all_presets(0) {
        let net = Network::build(&spec)?;
        let image = Tensor::from_fn(spec.input_shape, |_, _, _| rng.next_f64());
        let feature = net.forward(&image, "noise")?;
        println!(
            "{:<15} input {}  {:>3} layers, tap before layer {:>3}, feature dim {:>5}, norm {:.3e}",
            spec.name,
            spec.input_shape,
            spec.layers.len(),
            net.tap_index(),
            feature.dim(),
            feature.norm()
        );
    }

    // Custom networks use the same text format the CLI accepts as --arch.
    let spec = NetworkSpec::parse(
        "tiny",
        "input 16 16 3\nconv 8 3 1 1\nrelu\nmaxpool 2 2\nfc 12   # tap sits before this layer\nfc 2\n",
        9,
    )?;
    let net = Network::build(&spec)?;
    let big = Tensor::from_fn((48, 64, 3).into(), |y, x, c| ((x + y + c) % 5) as f64 / 4.0);
    let patch = extract_patch(&big, (20.0, 30.0), 0.5, 16, 16)?;
    let feature = net.forward(&patch, "big@(20,30)")?;
    println!("\n{} from a 24px patch: dim {} (fc 12 input)", spec.name, feature.dim());
    print!("{}", spec.to_text());
    Ok(())
}
