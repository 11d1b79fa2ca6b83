//! Encoding, framing and corruption handling of link messages.
//!
//! ```text
//! cargo run --example wire_codec
//! ```

use armband_teleop::math::{PoseIncrement, Quaternion};
use armband_teleop::semg::GripState;
use armband_teleop::sync::wire::{frame_with_prefix, FrameDecoder};
use armband_teleop::sync::{decode_message, WireMessage};

fn hex(bytes: &[u8]) -> String {
    bytes
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grip = WireMessage::grip(1_500_000, GripState::Closed);
    let bytes = grip.encode();
    println!("GRIP frame ({} bytes): {}", bytes.len(), hex(&bytes));

    let inc = PoseIncrement {
        t_us: 1_520_000,
        dp: [0.001, -0.0005, 0.0],
        dq: Quaternion::from_axis_angle([0.0, 0.0, 1.0], 0.002)?,
    };
    let pose = WireMessage::pose_inc(&inc);
    println!("POSE_INC frame: {} bytes", pose.encode().len());

    let mut corrupted = bytes.clone();
    corrupted[5] ^= 0x10;
    println!(
        "flipped bit in timestamp: {}",
        decode_message(&corrupted).unwrap_err()
    );
    corrupted = bytes.clone();
    corrupted[0] = 0x00;
    println!("zeroed magic: {}", decode_message(&corrupted).unwrap_err());

    // length-prefixed stream delivered in awkward chunks
    let mut stream = frame_with_prefix(&bytes)?;
    stream.extend(frame_with_prefix(&pose.encode())?);
    let mut decoder = FrameDecoder::new();
    for chunk in stream.chunks(7) {
        decoder.extend(chunk);
        while let Some(frame) = decoder.next_frame() {
            let msg = decode_message(&frame)?;
            println!("decoded {:?} at t={} us", msg.kind(), msg.t_us);
        }
    }
    Ok(())
}
