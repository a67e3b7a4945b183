use super::cuts::{Cut, Operator, Side};
use super::DiscoveryError;
use crate::declare::{DeclareRule, Template};

/// Would every model built on this cut violate the rule, whatever the two
/// sides later turn into?
///
/// Binary rules with both labels on one side only matter for loop cuts: the
/// side repeats, so an occurrence of `a` in one iteration meets `b` in another.
pub fn forces_violation(rule: &DeclareRule, cut: &Cut) -> Result<bool, DiscoveryError> {
    let side = |label: &str| {
        cut.side_of(label)
            .ok_or_else(|| DiscoveryError::LabelNotInScope(label.to_string()))
    };
    let a = side(rule.first())?;
    let op = cut.operator();
    use Operator::*;
    use Side::*;

    let Some(b_label) = rule.second() else {
        return Ok(match rule.template() {
            Template::Existence => op == Xor || (op == Loop && a == Second),
            Template::AtMost => op == Loop,
            _ => unreachable!("only two unary templates"),
        });
    };
    let b = side(b_label)?;

    if a == b {
        return Ok(op == Loop
            && matches!(
                rule.template(),
                Template::NotCoExistence | Template::NotSuccession
            ));
    }

    Ok(match rule.template() {
        Template::Response => match op {
            Xor | Parallel => true,
            Sequence => a == Second,
            Loop => a == First,
        },
        Template::Precedence => match op {
            Xor | Parallel => true,
            Sequence => b == First,
            Loop => b == First,
        },
        Template::CoExistence => matches!(op, Xor | Loop),
        Template::NotCoExistence => op != Xor,
        Template::NotSuccession => match op {
            Xor => false,
            Sequence => a == First,
            Parallel | Loop => true,
        },
        Template::RespondedExistence => match op {
            Xor => true,
            Loop => a == First,
            Sequence | Parallel => false,
        },
        Template::AtMost | Template::Existence => unreachable!("binary rule"),
    })
}

/// True if any rule whose labels all lie in the cut forbids it.
pub fn is_forbidden(rules: &[DeclareRule], cut: &Cut) -> bool {
    rules
        .iter()
        .filter(|r| r.args().iter().all(|l| cut.side_of(l).is_some()))
        .any(|r| forces_violation(r, cut).unwrap_or(false))
}
