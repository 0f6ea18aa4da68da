//! Minimal webhook sink: prints every delivery document the gateway
//! POSTs. Point a subscription at it:
//!
//! ```text
//! cargo run -p camsense-gateway --example webhook_sink -- 127.0.0.1:9100
//!
//! curl -X POST http://127.0.0.1:8080/api/cameras/<id>/subscriptions \
//!     -H 'Content-Type: application/json' \
//!     -d '{"trigger":"on_true","target_url":"http://127.0.0.1:9100/hook","retries":2}'
//! ```

use axum::{routing::post, Json, Router};
use serde_json::Value;

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listen = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "127.0.0.1:9100".to_string());
    let app = Router::new().route(
        "/hook",
        post(|Json(body): Json<Value>| async move {
            println!(
                "delivery: camera={} sequence={} value={} ({}/{} frames, {}%)",
                body["camera_id"],
                body["sequence_id"],
                body["value"],
                body["positive_frames"],
                body["frame_count"],
                body["detection_percent"]
            );
            "ok"
        }),
    );
    let listener = tokio::net::TcpListener::bind(&listen).await?;
    println!("webhook sink listening on http://{listen}/hook");
    axum::serve(listener, app).await?;
    Ok(())
}
