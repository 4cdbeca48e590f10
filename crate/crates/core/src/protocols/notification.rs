//! Anonymous notification by XOR shares.
//!
//! For every target `i`, each agent `j` splits a bit into `n` shares
//! `r[j][k]` and hands share `k` to agent `k`. Alice's row XORs to 1 exactly
//! when `i` is one of her receivers; every other row XORs to 0. Agent `k`
//! forwards the column parity `z_k` to `i`, and `i` learns
//! `z = ⊕_k z_k = ⊕_j ⊕_k r[j][k]`, which is Alice's row parity.

use std::fmt::Write as _;

use serde::Serialize;

use crate::netmodel::{Bits, Network, PartyId, RoleAssignment, Transcript};

use super::ProtocolError;

/// All shares `r[j][k]` generated for one target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShareTable {
    pub target: PartyId,
    pub rows: Vec<Vec<u8>>,
}

impl ShareTable {
    /// `z_k = ⊕_j r[j][k]` for every agent `k`.
    pub fn column_parities(&self) -> Vec<u8> {
        let n = self.rows.len();
        (0..n)
            .map(|k| self.rows.iter().fold(0, |acc, row| acc ^ row[k]))
            .collect()
    }

    /// The bit the target recovers.
    pub fn notified_bit(&self) -> u8 {
        self.column_parities().iter().fold(0, |acc, z| acc ^ z)
    }

    pub fn row_parity(&self, j: PartyId) -> u8 {
        self.rows[j].iter().fold(0, |acc, r| acc ^ r)
    }

    /// Plain-text rendering: one row per sender with its parity, then the
    /// column parities the target receives.
    pub fn render(&self, alice: PartyId) -> String {
        let n = self.rows.len();
        let mut out = String::new();
        let _ = writeln!(out, "target P{}", self.target);
        let _ = write!(out, "{:>8} ", "");
        for k in 0..n {
            let _ = write!(out, " P{k:<2}");
        }
        let _ = writeln!(out, "   ⊕");
        for (j, row) in self.rows.iter().enumerate() {
            let tag = if j == alice { "A" } else { " " };
            let _ = write!(out, "{tag} P{j:<2} → ");
            for r in row {
                let _ = write!(out, "  {r} ");
            }
            let _ = writeln!(out, "   {}", self.row_parity(j));
        }
        let _ = write!(out, "{:>8} ", "z_k");
        for z in self.column_parities() {
            let _ = write!(out, "  {z} ");
        }
        let _ = writeln!(out, "   {}", self.notified_bit());
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NotificationOutcome {
    /// `z^i` for every party `i`.
    pub notified: Vec<u8>,
    pub tables: Vec<ShareTable>,
    pub transcript: Transcript,
}

impl NotificationOutcome {
    pub fn notified_set(&self) -> Vec<PartyId> {
        (0..self.notified.len()).filter(|&i| self.notified[i] == 1).collect()
    }
}

/// Completes `n − 1` free random bits into `n` shares XORing to `parity`.
pub fn share_row(free: &[u8], parity: u8) -> Vec<u8> {
    let last = free.iter().fold(parity, |acc, r| acc ^ r);
    free.iter().copied().chain(std::iter::once(last)).collect()
}

/// Runs the notification for every target in turn.
pub fn notification(roles: &RoleAssignment, net: &mut Network) -> Result<NotificationOutcome, ProtocolError> {
    let n = roles.n();
    if net.n() != n {
        return Err(ProtocolError::Precondition(format!(
            "roles for {n} parties on a network of {}",
            net.n()
        )));
    }
    let mut tables = Vec::with_capacity(n);
    for target in 0..n {
        net.begin_round("notification/step1");
        let mut rows = Vec::with_capacity(n);
        for j in 0..n {
            let parity = u8::from(j == roles.alice() && roles.receivers().contains(&target));
            let free = net.draw_bits(j, n - 1);
            let row = share_row(&free.0, parity);
            for (k, &r) in row.iter().enumerate() {
                if k == j {
                    net.deliver_local(j, Bits::one(r))?;
                } else {
                    net.send_private(j, k, Bits::one(r))?;
                }
            }
            rows.push(row);
        }
        let table = ShareTable { target, rows };

        net.begin_round("notification/step2");
        for (k, z) in table.column_parities().into_iter().enumerate() {
            if k == target {
                net.deliver_local(k, Bits::one(z))?;
            } else {
                net.send_private(k, target, Bits::one(z))?;
            }
        }
        tables.push(table);
    }
    Ok(NotificationOutcome {
        notified: tables.iter().map(ShareTable::notified_bit).collect(),
        tables,
        transcript: net.transcript().clone(),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::netmodel::{extract_view, EntryKind};

    #[test]
    fn no_receivers_means_no_notifications() {
        let roles = RoleAssignment::new(5, 2, []).unwrap();
        let out = notification(&roles, &mut Network::new(5, 3)).unwrap();
        assert_eq!(out.notified, vec![0; 5]);
    }

    #[test]
    fn single_receiver_every_seed() {
        let roles = RoleAssignment::new(4, 0, [2]).unwrap();
        for seed in 0..200 {
            let out = notification(&roles, &mut Network::new(4, seed)).unwrap();
            assert_eq!(out.notified, vec![0, 0, 1, 0]);
            for t in &out.tables {
                for j in 0..4 {
                    let expect = u8::from(j == 0 && t.target == 2);
                    assert_eq!(t.row_parity(j), expect);
                }
            }
        }
    }

    /// Enumerates every assignment of the 9 bits of a 3×3 share table and
    /// keeps the ones obeying the row-parity rule.
    #[test]
    fn exhaustive_share_tables_n3() {
        let n = 3;
        for alice in 0..n {
            for target in 0..n {
                for is_receiver in [false, true] {
                    if is_receiver && target == alice {
                        continue;
                    }
                    let mut valid = 0;
                    for bits in 0u32..(1 << 9) {
                        let rows: Vec<Vec<u8>> = (0..n)
                            .map(|j| (0..n).map(|k| ((bits >> (j * n + k)) & 1) as u8).collect())
                            .collect();
                        let table = ShareTable { target, rows };
                        let rule_ok = (0..n).all(|j| table.row_parity(j) == u8::from(j == alice && is_receiver));
                        if !rule_ok {
                            continue;
                        }
                        valid += 1;
                        assert_eq!(table.notified_bit(), u8::from(is_receiver));
                    }
                    // each of the 3 rows has 2 free bits
                    assert_eq!(valid, 64);

                    // the generator reaches exactly the same 64 tables
                    let mut generated = BTreeSet::new();
                    for free in 0u32..(1 << 6) {
                        let rows: Vec<Vec<u8>> = (0..n)
                            .map(|j| {
                                let bits: Vec<u8> = (0..n - 1).map(|k| ((free >> (j * 2 + k)) & 1) as u8).collect();
                                share_row(&bits, u8::from(j == alice && is_receiver))
                            })
                            .collect();
                        let table = ShareTable { target, rows };
                        assert_eq!(table.notified_bit(), u8::from(is_receiver));
                        generated.insert(table.rows);
                    }
                    assert_eq!(generated.len(), 64);
                }
            }
        }
    }

    #[test]
    fn private_bit_count_n4() {
        let roles = RoleAssignment::new(4, 1, [0, 3]).unwrap();
        let mut net = Network::new(4, 9);
        notification(&roles, &mut net).unwrap();
        assert_eq!(net.counters().private_bits_sent, 64 + 16);
        assert_eq!(net.counters().broadcast_bits_sent, 0);
    }

    #[test]
    fn single_party_view_sees_own_column_and_sends() {
        let roles = RoleAssignment::new(4, 0, [1]).unwrap();
        let mut net = Network::new(4, 21);
        let out = notification(&roles, &mut net).unwrap();
        let k = 3;
        let view = extract_view(&out.transcript, &BTreeSet::from([k])).unwrap();
        let mut received_shares = 0;
        for e in &view.visible_entries {
            match e.kind {
                EntryKind::Private { from, to } => assert!(from == k || to == k),
                _ => panic!("notification has no broadcasts"),
            }
            if e.phase == "notification/step1" && e.kind.to() == Some(k) {
                received_shares += 1;
            }
        }
        // one share r^i_{j,k} from every j, for every target i
        assert_eq!(received_shares, 16);
        for t in &out.tables {
            let column: Vec<u8> = view
                .visible_entries
                .iter()
                .filter(|e| e.phase == "notification/step1" && e.kind.to() == Some(k))
                .filter(|e| e.round == 2 * t.target + 1)
                .map(|e| e.bits.0[0])
                .collect();
            let expect: Vec<u8> = t.rows.iter().map(|row| row[k]).collect();
            assert_eq!(column, expect);
        }
    }

    #[test]
    fn render_has_one_line_per_row() {
        let roles = RoleAssignment::new(4, 0, [2]).unwrap();
        let out = notification(&roles, &mut Network::new(4, 1)).unwrap();
        let text = out.tables[2].render(0);
        assert_eq!(text.lines().count(), 1 + 1 + 4 + 1);
        assert!(text.lines().last().unwrap().trim_end().ends_with('1'));
    }
}
