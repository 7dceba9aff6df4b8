//! Generation policies and reward models: synthetic testbeds with known
//! optima, an HTTP completion client, and ground-truth verifiers.

pub mod http;
pub mod planted;
pub mod scripted;
pub mod stub_server;
pub mod synthetic;
pub mod verifier;
pub mod wiener;

pub use http::{HttpConfig, HttpGenerationBackend};
pub use planted::{PlantedReward, PlantedScoring, PlantedTreePolicy};
pub use scripted::{CountingPolicy, FixedLatency, FnPolicy, LastNumberReward, ScriptedPolicy};
pub use synthetic::{suite_instance, SuiteConfig, SyntheticInstance, SyntheticSuite};
pub use verifier::{score_with_verifier, TestCase, VerifierReward, VerifierSpec};
pub use wiener::{WienerPolicy, WienerReward};
