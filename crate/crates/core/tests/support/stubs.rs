//! Gate stand-ins with a fixed verdict and an artificial delay.

use std::time::Duration;

use insight_core::embedding::Embedding;
use insight_core::manager::{BranchRouter, OodDetector, OodVerdict, RouteDecision};
use insight_core::types::Route;

pub struct SlowOod {
    pub delay: Duration,
    pub out_of_domain: bool,
}

impl OodDetector for SlowOod {
    fn classify(&self, _: &Embedding) -> insight_core::Result<OodVerdict> {
        std::thread::sleep(self.delay);
        Ok(if self.out_of_domain {
            OodVerdict::OutOfDomain(2.0)
        } else {
            OodVerdict::InDomain(0.1)
        })
    }

    fn threshold(&self) -> f64 {
        1.0
    }
}

pub struct SlowRouter {
    pub delay: Duration,
    pub route: Route,
}

impl BranchRouter for SlowRouter {
    fn route(&self, _: &Embedding) -> insight_core::Result<RouteDecision> {
        std::thread::sleep(self.delay);
        Ok(RouteDecision {
            route: self.route,
            confidence: 0.9,
            score: 1.0,
        })
    }
}
