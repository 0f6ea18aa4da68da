//! The line-oriented synthetic cascade format: write one, parse it back,
//! and watch a window pass or fail stage by stage.

use camsense::cascade::{load_synthetic_cascade, write_synthetic_cascade};
use camsense::detector::{eval_feature, eval_window};
use camsense::raster::{GrayImage, IntegralSet, Rect};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = "window 8 8\n\
                stage 0.5\n\
                stump 0 0 8 8 -1 0 0 8 4 2 0.5 -1 1\n";
    let model = load_synthetic_cascade(text)?;
    println!("parsed {} stage(s); canonical form:", model.stages.len());
    print!("{}", write_synthetic_cascade(&model)?);

    // a window whose top half outshines the bottom passes the stump
    let mut bright_top = GrayImage::filled(8, 8, 0)?;
    for y in 0..4 {
        for x in 0..8 {
            bright_top.set(x, y, 200);
        }
    }
    let flat = GrayImage::filled(8, 8, 128)?;

    let window = Rect::new(0, 0, 8, 8);
    for (name, img) in [("bright-top", &bright_top), ("flat", &flat)] {
        let integrals = IntegralSet::build(img);
        let feature = &model.stages[0].trees[0].nodes[0].feature;
        let value = eval_feature(&integrals, feature, window, 1.0)?;
        let passes = eval_window(&integrals, &model, window, 1.0)?;
        println!("{name:>10}: feature value {value:+.3}, window passes = {passes}");
    }
    Ok(())
}
