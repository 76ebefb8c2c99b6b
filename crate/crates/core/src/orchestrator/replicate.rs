use crate::protocol::{ProjectDescription, Transcript};

use super::debate::{run_debate, RunSession};
use super::labels::RunLabel;
use super::{DebateError, TeamConfig};

/// Outcome of one failed replication.
#[derive(Debug)]
pub struct ReplicationFailure {
    pub replication_index: u32,
    pub error: DebateError,
}

/// All replications of one project description: completed transcripts plus
/// per-replication failures. Together they account for exactly
/// `replication_count` entries.
#[derive(Debug)]
pub struct DebateResult {
    pub transcripts: Vec<Transcript>,
    pub failures: Vec<ReplicationFailure>,
}

/// Runs `team.replication_count` independent debates labeled
/// `O<pd_index>_1 .. O<pd_index>_n`. Each replication gets a fresh session
/// from the factory, so no state is shared between runs. Succeeds when at
/// least one replication completed; fails with `AllReplicationsFailed`
/// otherwise.
pub fn run_replications(
    pd: &ProjectDescription,
    team: &TeamConfig,
    pd_index: u32,
    mut session_factory: impl FnMut(u32) -> Result<RunSession, DebateError>,
) -> Result<DebateResult, DebateError> {
    team.validate()?;
    if team.replication_count < 1 {
        return Err(DebateError::InvalidArgument("replication_count must be >= 1".into()));
    }

    let mut transcripts = Vec::new();
    let mut failures = Vec::new();
    for replication_index in 1..=team.replication_count {
        let label = RunLabel::debate(pd_index, replication_index);
        let outcome = session_factory(replication_index)
            .and_then(|mut session| run_debate(pd, team, &mut session, &label));
        match outcome {
            Ok(transcript) => transcripts.push(transcript),
            Err(error) => {
                tracing::warn!(replication_index, %error, "replication failed");
                failures.push(ReplicationFailure { replication_index, error });
            }
        }
    }

    if transcripts.is_empty() {
        return Err(DebateError::AllReplicationsFailed { failures });
    }
    Ok(DebateResult { transcripts, failures })
}

/// Concurrent variant: sessions are created up front (sequentially, so the
/// factory stays simple), then each replication runs on its own thread. Only
/// meaningful for backends that are safe for concurrent use by independent
/// runs, i.e. the remote adapter.
pub fn run_replications_parallel(
    pd: &ProjectDescription,
    team: &TeamConfig,
    pd_index: u32,
    mut session_factory: impl FnMut(u32) -> Result<RunSession, DebateError>,
) -> Result<DebateResult, DebateError> {
    team.validate()?;
    if team.replication_count < 1 {
        return Err(DebateError::InvalidArgument("replication_count must be >= 1".into()));
    }

    let mut prepared: Vec<(u32, Result<RunSession, DebateError>)> = Vec::new();
    for replication_index in 1..=team.replication_count {
        prepared.push((replication_index, session_factory(replication_index)));
    }

    let mut outcomes: Vec<(u32, Result<Transcript, DebateError>)> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (replication_index, session) in prepared {
            match session {
                Ok(mut session) => {
                    let label = RunLabel::debate(pd_index, replication_index);
                    handles.push((
                        replication_index,
                        scope.spawn(move || run_debate(pd, team, &mut session, &label)),
                    ));
                }
                Err(error) => outcomes.push((replication_index, Err(error))),
            }
        }
        for (replication_index, handle) in handles {
            let outcome = handle.join().unwrap_or_else(|_| {
                Err(DebateError::InvalidArgument("replication thread panicked".into()))
            });
            outcomes.push((replication_index, outcome));
        }
    });
    outcomes.sort_by_key(|(index, _)| *index);

    let mut transcripts = Vec::new();
    let mut failures = Vec::new();
    for (replication_index, outcome) in outcomes {
        match outcome {
            Ok(transcript) => transcripts.push(transcript),
            Err(error) => failures.push(ReplicationFailure { replication_index, error }),
        }
    }
    if transcripts.is_empty() {
        return Err(DebateError::AllReplicationsFailed { failures });
    }
    Ok(DebateResult { transcripts, failures })
}
