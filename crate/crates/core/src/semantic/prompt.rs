use super::EventMetadata;
use crate::error::{Error, Result};

fn check(meta: &EventMetadata) -> Result<()> {
    if meta.title.trim().is_empty() || meta.description.trim().is_empty() {
        return Err(Error::IncompleteMetadata(meta.market_id.clone()));
    }
    Ok(())
}

/// Fixed prompt asking whether the leader plausibly drives the follower.
pub fn build_prompt(leader: &EventMetadata, follower: &EventMetadata) -> Result<String> {
    check(leader)?;
    check(follower)?;
    Ok(format!(
        "You are reviewing a candidate lead-lag relationship between two prediction-market events.\n\
         \n\
         A statistical screen found that moves in the LEADER event's YES price tend to come \
         before moves in the FOLLOWER event's YES price. Decide whether there is a credible \
         economic channel through which a move in the leader could drive or anticipate a move \
         in the follower, going beyond mere correlation. Judge only the stated direction.\n\
         \n\
         LEADER event\n\
         Title: {lt}\n\
         Description: {ld}\n\
         \n\
         FOLLOWER event\n\
         Title: {ft}\n\
         Description: {fd}\n\
         \n\
         Proposed direction: LEADER -> FOLLOWER\n\
         \n\
         Reply with a single JSON object and nothing else, with exactly these fields:\n\
         {{\"plausible\": true or false, \"strength\": \"none\" | \"weak\" | \"moderate\" | \"strong\", \
         \"expected_sign\": 1 or -1, \"rationale\": \"one or two sentences\"}}\n\
         \n\
         - \"strength\" grades how direct and reliable the channel is; use \"none\" with \
         \"plausible\": false when no credible channel exists.\n\
         - \"expected_sign\" is 1 if a higher leader probability should raise the follower's \
         probability and -1 if it should lower it.\n",
        lt = leader.title.trim(),
        ld = leader.description.trim(),
        ft = follower.title.trim(),
        fd = follower.description.trim(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(id: &str, title: &str, desc: &str) -> EventMetadata {
        EventMetadata {
            market_id: id.into(),
            title: title.into(),
            description: desc.into(),
            event_group: id.into(),
        }
    }

    #[test]
    fn deterministic_and_contains_titles() {
        let l = meta("a", "Fed cuts rates in March", "Resolves YES if the FOMC lowers the target range.");
        let f = meta("b", "US recession in 2025", "Resolves YES if NBER declares a recession.");
        let p1 = build_prompt(&l, &f).unwrap();
        assert_eq!(p1, build_prompt(&l, &f).unwrap());
        assert!(p1.contains("Fed cuts rates in March"));
        assert!(p1.contains("US recession in 2025"));
        assert!(p1.find("Fed cuts").unwrap() < p1.find("US recession").unwrap());
        assert_ne!(p1, build_prompt(&f, &l).unwrap());
    }

    #[test]
    fn missing_fields_are_rejected() {
        let ok = meta("a", "t", "d");
        assert!(matches!(
            build_prompt(&meta("x", " ", "d"), &ok),
            Err(Error::IncompleteMetadata(id)) if id == "x"
        ));
        assert!(build_prompt(&ok, &meta("y", "t", "")).is_err());
    }
}
