//! Act as a camera: register against a running gateway, push a burst of
//! frames, then poll until the sensor reading lands.
//!
//! Start a gateway first, e.g.
//!
//! ```text
//! cargo run -p camsense-gateway --bin camsense -- serve \
//!     --data-root /tmp/camsense --listen 127.0.0.1:8080 \
//!     --model crates/core/fixtures/models/upperbody-22x18.xml
//! ```
//!
//! then: cargo run -p camsense-gateway --example push_frames -- http://127.0.0.1:8080

use camsense::raster::{encode_pgm, GrayImage};
use serde_json::Value;
use std::time::Duration;

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "http://127.0.0.1:8080".to_string());
    let client = reqwest::Client::new();

    let registered: Value = client
        .post(format!("{base}/api/cameras"))
        .json(&serde_json::json!({ "label": "example-camera" }))
        .send()
        .await?
        .error_for_status()?
        .json()
        .await?;
    let camera_id = registered["camera_id"].as_str().unwrap().to_string();
    let token = registered["token"].as_str().unwrap().to_string();
    println!("registered camera {camera_id}");

    // a burst of gradient frames, ~10 fps
    for i in 0u32..10 {
        let mut img = GrayImage::filled(320, 240, 16)?;
        for y in 0..img.height() {
            for x in 0..img.width() {
                img.set(x, y, ((x + y + 13 * i) % 256) as u8);
            }
        }
        let ack: Value = client
            .post(format!("{base}/api/cameras/{camera_id}/frames"))
            .header("Authorization", format!("Bearer {token}"))
            .header("Content-Type", "image/x-portable-graymap")
            .body(encode_pgm(&img))
            .send()
            .await?
            .error_for_status()?
            .json()
            .await?;
        println!(
            "frame {} -> sequence {} index {}",
            i, ack["sequence_id"], ack["frame_index"]
        );
        tokio::time::sleep(Duration::from_millis(100)).await;
    }

    println!("burst done; waiting for the idle timeout to close the sequence");
    loop {
        tokio::time::sleep(Duration::from_millis(500)).await;
        let response = client
            .get(format!("{base}/api/cameras/{camera_id}/state"))
            .send()
            .await?;
        if response.status().is_success() {
            let state: Value = response.json().await?;
            println!(
                "reading: value={} positive={}/{} ({}%)",
                state["latest"]["value"],
                state["latest"]["positive_frames"],
                state["latest"]["frame_count"],
                state["latest"]["detection_percent"]
            );
            break;
        }
        print!(".");
        use std::io::Write;
        std::io::stdout().flush()?;
    }
    Ok(())
}
