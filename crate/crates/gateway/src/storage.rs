//! File-backed persistence: a JSON camera registry, a JSON subscription
//! list, one append-only JSONL reading log per camera, a JSONL webhook
//! delivery log, and raw frame files laid out as
//! `<data_root>/<camera_id>/<sequence_id>/<NNNNN>.<ext>`.
//!
//! Everything is held in memory behind an `RwLock` and written through on
//! mutation; `open` replays the files so restarts keep camera tokens and
//! reading idempotence.

use crate::GatewayError;
use camsense::sequence::SensorReading;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraRecord {
    pub camera_id: String,
    pub token: String,
    pub label: String,
    pub registered_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    OnTrue,
    OnFalse,
    OnChange,
}

impl Trigger {
    /// Does a reading with `value`, following `previous`, fire this
    /// trigger? A first-ever reading counts as a change.
    pub fn matches(self, value: bool, previous: Option<bool>) -> bool {
        match self {
            Trigger::OnTrue => value,
            Trigger::OnFalse => !value,
            Trigger::OnChange => previous != Some(value),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionSubscription {
    pub subscription_id: String,
    pub camera_id: String,
    pub trigger: Trigger,
    pub target_url: String,
    pub retries: u32,
}

/// Outcome of one webhook delivery (including all retry attempts).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub subscription_id: String,
    pub camera_id: String,
    pub sequence_id: String,
    pub target_url: String,
    pub attempts: u32,
    pub delivered: bool,
    pub last_error: Option<String>,
    pub finished_at: u64,
}

#[derive(Default)]
struct StoreIndex {
    cameras: HashMap<String, CameraRecord>,
    subscriptions: Vec<ActionSubscription>,
    readings: HashMap<String, Vec<SensorReading>>,
    recorded_sequences: HashSet<String>,
    deliveries: Vec<DeliveryRecord>,
}

pub struct FileStore {
    root: PathBuf,
    index: RwLock<StoreIndex>,
}

impl FileStore {
    /// Opens (or initializes) a store under `root`, replaying any existing
    /// registry and logs.
    pub fn open(root: impl Into<PathBuf>) -> Result<FileStore, GatewayError> {
        let root = root.into();
        std::fs::create_dir_all(root.join("readings"))?;
        let mut index = StoreIndex::default();

        let cameras_path = root.join("cameras.json");
        if cameras_path.exists() {
            let text = std::fs::read_to_string(&cameras_path)?;
            let cameras: Vec<CameraRecord> = serde_json::from_str(&text)
                .map_err(|e| GatewayError::BadRequest(format!("cameras.json: {e}")))?;
            for camera in cameras {
                index.cameras.insert(camera.camera_id.clone(), camera);
            }
        }
        let subs_path = root.join("subscriptions.json");
        if subs_path.exists() {
            let text = std::fs::read_to_string(&subs_path)?;
            index.subscriptions = serde_json::from_str(&text)
                .map_err(|e| GatewayError::BadRequest(format!("subscriptions.json: {e}")))?;
        }
        for camera_id in index.cameras.keys().cloned().collect::<Vec<_>>() {
            let log = root.join("readings").join(format!("{camera_id}.jsonl"));
            if log.exists() {
                let text = std::fs::read_to_string(&log)?;
                let mut readings = Vec::new();
                for line in text.lines().filter(|l| !l.trim().is_empty()) {
                    let reading: SensorReading = serde_json::from_str(line)
                        .map_err(|e| GatewayError::BadRequest(format!("reading log: {e}")))?;
                    index.recorded_sequences.insert(reading.sequence_id.clone());
                    readings.push(reading);
                }
                index.readings.insert(camera_id, readings);
            }
        }

        Ok(FileStore {
            root,
            index: RwLock::new(index),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn persist_cameras(&self, index: &StoreIndex) -> Result<(), GatewayError> {
        let mut cameras: Vec<&CameraRecord> = index.cameras.values().collect();
        cameras.sort_by(|a, b| a.camera_id.cmp(&b.camera_id));
        let text = serde_json::to_string_pretty(&cameras).expect("serializable");
        std::fs::write(self.root.join("cameras.json"), text)?;
        Ok(())
    }

    pub fn register_camera(&self, label: &str, now: u64) -> Result<CameraRecord, GatewayError> {
        let record = CameraRecord {
            camera_id: uuid::Uuid::new_v4().to_string(),
            token: uuid::Uuid::new_v4().simple().to_string(),
            label: label.to_string(),
            registered_at: now,
        };
        let mut index = self.index.write().expect("store lock");
        index
            .cameras
            .insert(record.camera_id.clone(), record.clone());
        self.persist_cameras(&index)?;
        Ok(record)
    }

    pub fn camera_ids(&self) -> Vec<String> {
        self.index
            .read()
            .expect("store lock")
            .cameras
            .keys()
            .cloned()
            .collect()
    }

    pub fn camera_exists(&self, camera_id: &str) -> bool {
        self.index
            .read()
            .expect("store lock")
            .cameras
            .contains_key(camera_id)
    }

    /// Token check for the frame-push endpoint. Unknown camera and bad
    /// token both come back `Unauthorized`; existence is not revealed to
    /// an unauthenticated caller.
    pub fn authenticate(&self, camera_id: &str, token: &str) -> Result<(), GatewayError> {
        let index = self.index.read().expect("store lock");
        match index.cameras.get(camera_id) {
            Some(record) if record.token == token => Ok(()),
            _ => Err(GatewayError::Unauthorized),
        }
    }

    pub fn add_subscription(
        &self,
        camera_id: &str,
        trigger: Trigger,
        target_url: &str,
        retries: u32,
    ) -> Result<ActionSubscription, GatewayError> {
        if !self.camera_exists(camera_id) {
            return Err(GatewayError::UnknownCamera(camera_id.to_string()));
        }
        let url: reqwest::Url = target_url
            .parse()
            .map_err(|e| GatewayError::BadRequest(format!("target_url: {e}")))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(GatewayError::BadRequest(format!(
                "target_url scheme {} not supported",
                url.scheme()
            )));
        }
        let subscription = ActionSubscription {
            subscription_id: uuid::Uuid::new_v4().to_string(),
            camera_id: camera_id.to_string(),
            trigger,
            target_url: target_url.to_string(),
            retries,
        };
        let mut index = self.index.write().expect("store lock");
        index.subscriptions.push(subscription.clone());
        let text = serde_json::to_string_pretty(&index.subscriptions).expect("serializable");
        std::fs::write(self.root.join("subscriptions.json"), text)?;
        Ok(subscription)
    }

    pub fn subscriptions_for(&self, camera_id: &str) -> Vec<ActionSubscription> {
        self.index
            .read()
            .expect("store lock")
            .subscriptions
            .iter()
            .filter(|s| s.camera_id == camera_id)
            .cloned()
            .collect()
    }

    /// Appends a reading to the camera's log. At most one reading per
    /// sequence ever lands, across restarts too.
    pub fn record_reading(&self, reading: &SensorReading) -> Result<(), GatewayError> {
        let mut index = self.index.write().expect("store lock");
        if !index.cameras.contains_key(&reading.camera_id) {
            return Err(GatewayError::UnknownCamera(reading.camera_id.clone()));
        }
        if index.recorded_sequences.contains(&reading.sequence_id) {
            return Err(GatewayError::DuplicateReading(reading.sequence_id.clone()));
        }
        let line = serde_json::to_string(reading).expect("serializable");
        let log = self
            .root
            .join("readings")
            .join(format!("{}.jsonl", reading.camera_id));
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(log)?;
        writeln!(file, "{line}")?;
        index.recorded_sequences.insert(reading.sequence_id.clone());
        index
            .readings
            .entry(reading.camera_id.clone())
            .or_default()
            .push(reading.clone());
        Ok(())
    }

    pub fn latest_reading(&self, camera_id: &str) -> Option<SensorReading> {
        self.index
            .read()
            .expect("store lock")
            .readings
            .get(camera_id)
            .and_then(|r| r.last().cloned())
    }

    /// Newest-first page of the camera's readings plus the total count.
    pub fn readings_page(
        &self,
        camera_id: &str,
        page: usize,
        page_size: usize,
    ) -> (Vec<SensorReading>, usize) {
        let index = self.index.read().expect("store lock");
        let Some(readings) = index.readings.get(camera_id) else {
            return (Vec::new(), 0);
        };
        let total = readings.len();
        let page_size = page_size.max(1);
        let page_items = readings
            .iter()
            .rev()
            .skip(page * page_size)
            .take(page_size)
            .cloned()
            .collect();
        (page_items, total)
    }

    /// Durably writes one frame at its canonical relative path.
    pub fn write_frame(&self, relative_path: &str, bytes: &[u8]) -> Result<PathBuf, GatewayError> {
        let path = self.root.join(relative_path);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = std::fs::File::create(&path)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        Ok(path)
    }

    pub fn record_delivery(&self, record: DeliveryRecord) {
        let mut index = self.index.write().expect("store lock");
        let line = serde_json::to_string(&record).expect("serializable");
        if let Ok(mut file) = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.root.join("deliveries.jsonl"))
        {
            let _ = writeln!(file, "{line}");
        }
        index.deliveries.push(record);
    }

    pub fn deliveries(&self) -> Vec<DeliveryRecord> {
        self.index.read().expect("store lock").deliveries.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reading(camera_id: &str, sequence_id: &str, value: bool) -> SensorReading {
        SensorReading {
            camera_id: camera_id.into(),
            sequence_id: sequence_id.into(),
            value,
            frame_count: 4,
            positive_frames: u32::from(value),
            detection_percent: if value { 25.0 } else { 0.0 },
            closed_at: 123,
        }
    }

    #[test]
    fn register_and_authenticate() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        let a = store.register_camera("lab-door", 1).unwrap();
        let b = store.register_camera("lab-window", 2).unwrap();
        assert_ne!(a.camera_id, b.camera_id);
        assert!(!a.token.is_empty());
        store.authenticate(&a.camera_id, &a.token).unwrap();
        assert!(matches!(
            store.authenticate(&a.camera_id, "wrong"),
            Err(GatewayError::Unauthorized)
        ));
        assert!(matches!(
            store.authenticate("ghost", &a.token),
            Err(GatewayError::Unauthorized)
        ));
    }

    #[test]
    fn readings_are_idempotent_per_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        let cam = store.register_camera("c", 0).unwrap();
        store
            .record_reading(&reading(&cam.camera_id, "s1", true))
            .unwrap();
        let err = store
            .record_reading(&reading(&cam.camera_id, "s1", false))
            .unwrap_err();
        assert!(matches!(err, GatewayError::DuplicateReading(_)));
        assert!(store.latest_reading(&cam.camera_id).unwrap().value);
    }

    #[test]
    fn state_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let cam = {
            let store = FileStore::open(dir.path()).unwrap();
            let cam = store.register_camera("c", 0).unwrap();
            store
                .record_reading(&reading(&cam.camera_id, "s1", true))
                .unwrap();
            store
                .record_reading(&reading(&cam.camera_id, "s2", false))
                .unwrap();
            cam
        };
        let store = FileStore::open(dir.path()).unwrap();
        store.authenticate(&cam.camera_id, &cam.token).unwrap();
        assert_eq!(
            store.latest_reading(&cam.camera_id).unwrap().sequence_id,
            "s2"
        );
        // idempotence survives the restart
        assert!(matches!(
            store.record_reading(&reading(&cam.camera_id, "s1", true)),
            Err(GatewayError::DuplicateReading(_))
        ));
    }

    #[test]
    fn paging_is_newest_first() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        let cam = store.register_camera("c", 0).unwrap();
        for i in 0..5 {
            store
                .record_reading(&reading(&cam.camera_id, &format!("s{i}"), i % 2 == 0))
                .unwrap();
        }
        let (page, total) = store.readings_page(&cam.camera_id, 0, 2);
        assert_eq!(total, 5);
        assert_eq!(page[0].sequence_id, "s4");
        assert_eq!(page[1].sequence_id, "s3");
        let (page, _) = store.readings_page(&cam.camera_id, 1, 1);
        assert_eq!(page[0].sequence_id, "s3");
    }

    #[test]
    fn frames_land_at_their_relative_path() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        let path = store
            .write_frame("cam/s1/00000.pgm", b"P5\n1 1\n255\n\x00")
            .unwrap();
        assert!(path.ends_with("cam/s1/00000.pgm"));
        assert!(path.exists());
    }

    #[test]
    fn subscription_url_must_be_http() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        let cam = store.register_camera("c", 0).unwrap();
        assert!(store
            .add_subscription(&cam.camera_id, Trigger::OnTrue, "http://127.0.0.1:9/x", 0)
            .is_ok());
        assert!(store
            .add_subscription(&cam.camera_id, Trigger::OnTrue, "not a url", 0)
            .is_err());
        assert!(store
            .add_subscription(&cam.camera_id, Trigger::OnTrue, "ftp://host/x", 0)
            .is_err());
        assert!(matches!(
            store.add_subscription("ghost", Trigger::OnTrue, "http://h/x", 0),
            Err(GatewayError::UnknownCamera(_))
        ));
    }

    #[test]
    fn trigger_matching_table() {
        assert!(Trigger::OnTrue.matches(true, None));
        assert!(!Trigger::OnTrue.matches(false, Some(true)));
        assert!(Trigger::OnFalse.matches(false, None));
        assert!(!Trigger::OnFalse.matches(true, None));
        // first-ever reading counts as a change
        assert!(Trigger::OnChange.matches(true, None));
        assert!(Trigger::OnChange.matches(false, Some(true)));
        assert!(!Trigger::OnChange.matches(true, Some(true)));
    }
}
