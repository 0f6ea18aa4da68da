//! Webhook action delivery. Every reading is matched against the camera's
//! subscriptions; each match gets the reading POSTed as JSON to its target
//! URL, retried with exponential backoff up to the subscription's retry
//! budget. Outcomes are recorded whether or not delivery succeeded.

use crate::now_ms;
use crate::state::AppState;
use crate::storage::{ActionSubscription, DeliveryRecord};
use camsense::sequence::SensorReading;
use std::time::Duration;

const REQUEST_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Clone)]
pub struct Deliverer {
    client: reqwest::Client,
    backoff_base: Duration,
}

impl Deliverer {
    pub fn new(backoff_base_ms: u64) -> Deliverer {
        Deliverer {
            client: reqwest::Client::new(),
            backoff_base: Duration::from_millis(backoff_base_ms),
        }
    }

    /// POSTs the delivery document, retrying up to `retries` extra times.
    pub async fn deliver(
        &self,
        subscription: &ActionSubscription,
        reading: &SensorReading,
    ) -> DeliveryRecord {
        let mut attempts = 0;
        let mut last_error = None;
        let mut delivered = false;
        while attempts <= subscription.retries {
            if attempts > 0 {
                let delay = self.backoff_base * 2u32.saturating_pow(attempts - 1);
                tokio::time::sleep(delay).await;
            }
            attempts += 1;
            let sent = self
                .client
                .post(&subscription.target_url)
                .timeout(REQUEST_TIMEOUT)
                .json(reading)
                .send()
                .await;
            match sent {
                Ok(response) if response.status().is_success() => {
                    delivered = true;
                    last_error = None;
                    break;
                }
                Ok(response) => {
                    last_error = Some(format!("status {}", response.status()));
                }
                Err(e) => {
                    last_error = Some(e.to_string());
                }
            }
        }
        DeliveryRecord {
            subscription_id: subscription.subscription_id.clone(),
            camera_id: subscription.camera_id.clone(),
            sequence_id: reading.sequence_id.clone(),
            target_url: subscription.target_url.clone(),
            attempts,
            delivered,
            last_error,
            finished_at: now_ms(),
        }
    }
}

/// Fires every subscription whose trigger matches this reading. Returns
/// how many deliveries were attempted.
pub async fn fire_actions(
    state: &AppState,
    reading: &SensorReading,
    previous_value: Option<bool>,
) -> usize {
    let matching: Vec<ActionSubscription> = state
        .0
        .store
        .subscriptions_for(&reading.camera_id)
        .into_iter()
        .filter(|s| s.trigger.matches(reading.value, previous_value))
        .collect();
    let attempted = matching.len();
    for subscription in matching {
        let record = state.0.deliverer.deliver(&subscription, reading).await;
        if record.delivered {
            tracing::info!(
                url = %record.target_url,
                attempts = record.attempts,
                "webhook delivered"
            );
        } else {
            tracing::warn!(
                url = %record.target_url,
                attempts = record.attempts,
                error = record.last_error.as_deref().unwrap_or("unknown"),
                "webhook delivery failed"
            );
        }
        state.0.store.record_delivery(record);
    }
    attempted
}
