use serde::{Deserialize, Serialize};

use super::types::{RunMode, Transcript};

/// One invariant breach found in a transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub detail: String,
}

/// Outcome of transcript validation; `ok` holds exactly when no violations
/// were found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

fn violation(violations: &mut Vec<Violation>, code: &str, detail: String) {
    violations.push(Violation { code: code.to_string(), detail });
}

/// Checks ordering, round/position contiguity, and mode-specific invariants.
/// Violations are data, not failures: the function is total.
pub fn validate_transcript(transcript: &Transcript) -> ValidationReport {
    let mut violations = Vec::new();
    let team_size = transcript.team.len();

    // Team positions must be contiguous 1..K with no duplicates.
    let mut positions: Vec<u32> = transcript.team.iter().map(|a| a.position_index).collect();
    positions.sort_unstable();
    let expected: Vec<u32> = (1..=team_size as u32).collect();
    if positions != expected {
        violation(
            &mut violations,
            "team_positions",
            format!("expected contiguous positions 1..{team_size}, got {positions:?}"),
        );
    }

    if transcript.mode == RunMode::Debate {
        for agent in &transcript.team {
            if agent.system_prompt.is_empty() {
                violation(
                    &mut violations,
                    "empty_system_prompt",
                    format!("agent '{}' has an empty system prompt", agent.agent_id),
                );
            }
        }
    }

    // Authors must belong to the team; messages strictly ordered by
    // (round, author position).
    let mut last_slot: Option<(u32, u32)> = None;
    for (index, message) in transcript.messages.iter().enumerate() {
        let Some(position) = transcript.position_of(&message.agent_id) else {
            violation(
                &mut violations,
                "unknown_author",
                format!("message {index} authored by '{}' not in team", message.agent_id),
            );
            continue;
        };
        let slot = (message.round, position);
        if let Some(previous) = last_slot {
            if slot <= previous {
                violation(
                    &mut violations,
                    "ordering",
                    format!("message {index} slot {slot:?} does not follow {previous:?}"),
                );
            }
        }
        last_slot = Some(slot);
    }

    // Contiguity: the j-th message of a debate occupies slot
    // (j / K + 1, j % K + 1).
    if transcript.mode == RunMode::Debate && team_size > 0 {
        for (index, message) in transcript.messages.iter().enumerate() {
            let expected_round = index as u32 / team_size as u32 + 1;
            let expected_position = index as u32 % team_size as u32 + 1;
            let position = transcript.position_of(&message.agent_id);
            if position != Some(expected_position) || message.round != expected_round {
                violation(
                    &mut violations,
                    "contiguity",
                    format!(
                        "message {index} at (round {}, position {:?}), expected ({expected_round}, {expected_position})",
                        message.round, position
                    ),
                );
                break;
            }
        }
    }

    match transcript.mode {
        RunMode::Debate => {
            let expected = transcript.round_count as usize * team_size;
            match &transcript.truncation {
                None => {
                    if transcript.messages.len() != expected {
                        violation(
                            &mut violations,
                            "message_count",
                            format!(
                                "completed debate must have round_count × team size = {expected} messages, got {}",
                                transcript.messages.len()
                            ),
                        );
                    }
                }
                Some(marker) => {
                    // A truncated run stops just before slot (round, agent):
                    // K·(r−1) + (i−1) messages.
                    if let Some(position) = transcript.position_of(&marker.agent_id) {
                        let expected = team_size as u32 * marker.round.saturating_sub(1)
                            + position.saturating_sub(1);
                        if transcript.messages.len() != expected as usize {
                            violation(
                                &mut violations,
                                "truncation",
                                format!(
                                    "truncation at round {} agent '{}' implies {expected} messages, got {}",
                                    marker.round,
                                    marker.agent_id,
                                    transcript.messages.len()
                                ),
                            );
                        }
                    } else {
                        violation(
                            &mut violations,
                            "truncation",
                            format!("truncation agent '{}' not in team", marker.agent_id),
                        );
                    }
                }
            }
        }
        RunMode::Baseline => {
            if team_size != 1 {
                violation(
                    &mut violations,
                    "baseline_team_size",
                    format!("baseline team must have exactly 1 member, got {team_size}"),
                );
            }
            if transcript.round_count != 1 {
                violation(
                    &mut violations,
                    "baseline_round_count",
                    format!("baseline round_count must be 1, got {}", transcript.round_count),
                );
            }
            if transcript.truncation.is_none() && transcript.messages.len() != 1 {
                violation(
                    &mut violations,
                    "message_count",
                    format!("baseline must have exactly 1 message, got {}", transcript.messages.len()),
                );
            }
        }
    }

    // run_id consistency between the transcript and its messages.
    for (index, message) in transcript.messages.iter().enumerate() {
        if message.run_id != transcript.run_id {
            violation(
                &mut violations,
                "run_id_mismatch",
                format!("message {index} run_id '{}' != '{}'", message.run_id, transcript.run_id),
            );
            break;
        }
    }

    ValidationReport { ok: violations.is_empty(), violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{parse_agent_output, AgentSpec, ProjectDescription};

    fn agent(i: u32) -> AgentSpec {
        AgentSpec {
            agent_id: format!("a{i}"),
            display_name: format!("Agent {i}"),
            role_title: "Dev".into(),
            system_prompt: "prompt".into(),
            position_index: i,
        }
    }

    fn debate_transcript(k: u32, rounds: u32) -> Transcript {
        let team: Vec<AgentSpec> = (1..=k).map(agent).collect();
        let mut messages = Vec::new();
        for round in 1..=rounds {
            for a in &team {
                let mut m = parse_agent_output("## Reply\nok\n", a, round);
                m.run_id = "run".into();
                messages.push(m);
            }
        }
        Transcript {
            run_id: "run".into(),
            run_label: "O1_1".into(),
            mode: RunMode::Debate,
            project: ProjectDescription {
                pd_id: "pd1".into(),
                title: "t".into(),
                body: "b".into(),
                incident_ref: None,
            },
            team,
            round_count: rounds,
            messages,
            backend_fingerprint: "scripted:x".into(),
            created_at: "1970-01-01T00:00:00Z".into(),
            truncation: None,
        }
    }

    #[test]
    fn completed_debate_validates() {
        let report = validate_transcript(&debate_transcript(3, 5));
        assert!(report.ok, "unexpected violations: {:?}", report.violations);
    }

    #[test]
    fn out_of_order_messages_flagged() {
        let mut t = debate_transcript(3, 2);
        t.messages.swap(1, 4);
        let report = validate_transcript(&t);
        assert!(!report.ok);
        assert!(report.violations.iter().any(|v| v.code == "ordering"));
    }

    #[test]
    fn baseline_with_two_agents_flagged() {
        let mut t = debate_transcript(2, 1);
        t.mode = RunMode::Baseline;
        t.messages.truncate(1);
        let report = validate_transcript(&t);
        assert!(report.violations.iter().any(|v| v.code == "baseline_team_size"));
    }

    #[test]
    fn wrong_message_count_flagged() {
        let mut t = debate_transcript(3, 5);
        t.messages.pop();
        let report = validate_transcript(&t);
        assert!(report.violations.iter().any(|v| v.code == "message_count"));
    }

    #[test]
    fn truncated_run_with_matching_count_validates() {
        let mut t = debate_transcript(3, 5);
        // Failure at round 3, agent position 2: 3·2 + 1 = 7 messages survive.
        t.messages.truncate(7);
        t.truncation = Some(super::super::types::TruncationMarker {
            round: 3,
            agent_id: "a2".into(),
            reason: "backend failure".into(),
        });
        let report = validate_transcript(&t);
        assert!(report.ok, "unexpected violations: {:?}", report.violations);
    }

    #[test]
    fn noncontiguous_team_positions_flagged() {
        let mut t = debate_transcript(2, 1);
        t.team[1].position_index = 5;
        let report = validate_transcript(&t);
        assert!(report.violations.iter().any(|v| v.code == "team_positions"));
    }

    #[test]
    fn ok_iff_no_violations() {
        let good = validate_transcript(&debate_transcript(1, 1));
        assert_eq!(good.ok, good.violations.is_empty());
        let mut t = debate_transcript(1, 1);
        t.messages.clear();
        let bad = validate_transcript(&t);
        assert_eq!(bad.ok, bad.violations.is_empty());
        assert!(!bad.ok);
    }
}
