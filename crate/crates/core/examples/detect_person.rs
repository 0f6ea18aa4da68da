//! Run the detector over one frame and write an annotated copy.
//!
//! Usage: cargo run -p camsense --example detect_person [IMAGE.pgm] [MODEL.xml]
//!
//! Without arguments a frame with a bright band is generated and scanned
//! with a synthetic cascade that fires on that band, so the run always
//! shows a detection.

use camsense::cascade::{load_synthetic_cascade, parse_cascade};
use camsense::detector::{detect, DetectionConfig};
use camsense::raster::{annotate_gray, decode_image, encode_ppm, GrayImage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();

    let img = match args.first() {
        Some(path) => decode_image(&std::fs::read(path)?, None)?,
        None => {
            let mut img = GrayImage::filled(64, 64, 10)?;
            for y in 24..32 {
                for x in 8..56 {
                    img.set(x, y, 240);
                }
            }
            img
        }
    };

    let model = match args.get(1) {
        Some(path) => parse_cascade(&std::fs::read(path)?)?,
        None => load_synthetic_cascade(
            "window 8 8\n\
             stage 0.5\n\
             stump 0 0 8 8 -1 0 0 8 4 2 0.5 -1 1\n",
        )?,
    };

    let config = if args.len() >= 2 {
        DetectionConfig::default()
    } else {
        DetectionConfig {
            scale_factor: 1.5,
            min_neighbors: 1,
            min_size: (8, 8),
            max_size: None,
            group_eps: 0.2,
        }
    };

    let result = detect(&img, &model, &config)?;
    println!("person_found = {}", result.person_found);
    for d in &result.detections {
        println!(
            "  rect x={} y={} w={} h={} neighbors={}",
            d.rect.x, d.rect.y, d.rect.w, d.rect.h, d.neighbors
        );
    }

    let rects: Vec<_> = result.detections.iter().map(|d| d.rect).collect();
    let annotated = annotate_gray(&img, &rects)?;
    let out = "detected.ppm";
    std::fs::write(out, encode_ppm(&annotated))?;
    println!("annotated copy written to {out}");
    Ok(())
}
