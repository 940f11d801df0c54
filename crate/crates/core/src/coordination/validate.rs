use super::option::OptionSet;
use super::propose::CoordinationContext;
use super::{Violation, ViolationKind};
use crate::metrics::{satisfied_count, ScoreMatrix};

/// Checks scored options against the round rules.
///
/// Round 1 options need two members scoring above 0; later, every new
/// option needs at least as many as the carried candidate had. A required
/// attendee must score above 0 somewhere, and there may be at most K
/// options.
pub fn validate_options(options: &OptionSet, matrix: &ScoreMatrix, ctx: &CoordinationContext) -> Vec<Violation> {
    let round = options.round;
    let mut out = Vec::new();
    for (j, o) in options.options.iter().enumerate() {
        let satisfied = satisfied_count(matrix.row(j));
        match &options.carried_candidate {
            None if satisfied < 2 => out.push(Violation::new(
                round,
                ViolationKind::TooFewSatisfied {
                    option: o.id.clone(),
                    satisfied,
                },
            )),
            Some(carried) if carried != &o.id && satisfied < ctx.candidate_users => out.push(Violation::new(
                round,
                ViolationKind::BelowCandidate {
                    option: o.id.clone(),
                    satisfied,
                    required: ctx.candidate_users,
                },
            )),
            _ => {}
        }
    }
    for member in &ctx.required_attendees {
        let Some(i) = matrix.member_ids.iter().position(|m| m == member) else {
            continue;
        };
        if (0..matrix.num_options()).all(|j| matrix.row(j)[i] == 0) {
            out.push(Violation::new(
                round,
                ViolationKind::RequiredAttendeeUnsatisfied { member: member.clone() },
            ));
        }
    }
    if options.len() > ctx.k {
        out.push(Violation::new(
            round,
            ViolationKind::TooManyOptions {
                proposed: options.len(),
                max: ctx.k,
            },
        ));
    }
    out
}
