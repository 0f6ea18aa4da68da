//! Replay a frame stream through the sequence tracker with a simulated
//! clock: two motion bursts separated by silence become two sequences and
//! two sensor readings.

use camsense::sequence::{
    emit_reading, AggregationPolicy, SensorReading, SequenceBuffer, SequenceTracker, TrackerConfig,
};

fn main() {
    let mut tracker = SequenceTracker::new(TrackerConfig::default());
    tracker.register_camera("lab-door");
    let policy = AggregationPolicy::default();
    let mut closed: Vec<SequenceBuffer> = Vec::new();

    // burst one: five frames a second apart, person visible in frame 3
    let mut now = 10_000;
    for i in 0..5 {
        let ack = tracker.ingest_frame("lab-door", "pgm", now).unwrap();
        tracker.set_frame_result("lab-door", &ack.sequence_id, i, i == 3);
        println!(
            "t={now}ms  frame {i} -> {} ({})",
            ack.sequence_id, ack.storage_path
        );
        now += 1_000;
    }

    // silence well past the idle timeout, then a three-frame burst with
    // nobody in it; its first frame closes the previous sequence
    now += 20_000;
    for i in 0..3 {
        let ack = tracker.ingest_frame("lab-door", "pgm", now).unwrap();
        tracker.set_frame_result("lab-door", &ack.sequence_id, i, false);
        println!("t={now}ms  frame {i} -> {}", ack.sequence_id);
        closed.extend(ack.closed_previous);
        now += 500;
    }

    // the idle timer closes the second burst
    now += 10_000;
    closed.extend(tracker.close_idle(now));
    closed.sort_by_key(|b| b.opened_at);

    println!("\nreadings:");
    for buffer in &closed {
        let reading = emit_reading(buffer, &policy).unwrap();
        print_reading(&reading);
    }
}

fn print_reading(reading: &SensorReading) {
    println!(
        "  {}: value={} ({}/{} frames positive, {:.2}%)",
        reading.sequence_id,
        reading.value,
        reading.positive_frames,
        reading.frame_count,
        reading.detection_percent
    );
}
