//! Compute the receptive field growth of convolutional stacks from a
//! compact layer grammar.
//!
//! `4x4s2` is a 4x4 kernel at stride 2 (padding defaults to 1, `p` sets it
//! explicitly). The per-layer receptive field follows the standard
//! recurrence: each layer adds (kernel - 1) times the accumulated stride
//! product.

use fisheye_lab::toynet::{parse_layer_stack, receptive_field, stride_discrepancy_note};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for spec in [
        "4x4s2,4x4s2,4x4s2,4x4s1,4x4s1",
        "4x4s2,4x4s2,4x4s2,4x4s2,4x4s2",
        "3x3s1,3x3s1,3x3s2",
    ] {
        let layers = parse_layer_stack(spec)?;
        let fields = receptive_field(&layers)?;
        let rendered: Vec<String> = fields.iter().map(|f| f.to_string()).collect();
        println!("{spec}");
        println!("  receptive fields: {}", rendered.join(" "));
        if let Some(note) = stride_discrepancy_note(&layers) {
            println!("  note: {note}");
        }
    }
    Ok(())
}
