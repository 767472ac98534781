//! The line-oriented wire format: every bus message is one line,
//! `<type_tag> <json-object>`, with big integers as lowercase big-endian hex.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use epimpc_core::density::{MaskShare, MaskedShare, MaskSum, SessionId};
use epimpc_core::psi::{PsiMode, Round1Message, Round2Message};
use epimpc_core::{CellIndex, FieldElement, FieldParams, GroupElement, GroupParams, Token};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityShareV1 {
    pub round: u64,
    pub citizen_session: u64,
    pub indices: Vec<u32>,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensitySumV1 {
    pub round: u64,
    pub sessions: Vec<u64>,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiRound1V1 {
    pub session: u64,
    pub mode: String,
    pub ciphertexts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiRound2V1 {
    pub session: u64,
    pub double_enc: Vec<String>,
    pub sender_enc: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfectedUploadV1 {
    pub citizen_session: u64,
    pub tokens: Vec<String>,
    pub epoch: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaPairV1 {
    pub token: String,
    pub cell: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfectionReportV1 {
    pub citizen_session: u64,
    #[serde(rename = "tokens_L", skip_serializing_if = "Option::is_none", default)]
    pub tokens_l: Option<Vec<String>>,
    pub ra_pairs: Vec<RaPairV1>,
    pub epoch: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotifyV1 {
    pub citizen_session: u64,
    pub bit: u8,
}

/// Every message type carried by the bus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireMessage {
    DensityShare(DensityShareV1),
    DensitySum(DensitySumV1),
    PsiRound1(PsiRound1V1),
    PsiRound2(PsiRound2V1),
    InfectedUpload(InfectedUploadV1),
    InfectionReport(InfectionReportV1),
    Notify(NotifyV1),
}

impl WireMessage {
    pub fn type_tag(&self) -> &'static str {
        match self {
            WireMessage::DensityShare(_) => "density_share_v1",
            WireMessage::DensitySum(_) => "density_sum_v1",
            WireMessage::PsiRound1(_) => "psi_round1_v1",
            WireMessage::PsiRound2(_) => "psi_round2_v1",
            WireMessage::InfectedUpload(_) => "infected_upload_v1",
            WireMessage::InfectionReport(_) => "infection_report_v1",
            WireMessage::Notify(_) => "notify_v1",
        }
    }

    /// One line: `<type_tag> <json>`.
    pub fn encode(&self) -> String {
        let body = match self {
            WireMessage::DensityShare(m) => serde_json::to_string(m),
            WireMessage::DensitySum(m) => serde_json::to_string(m),
            WireMessage::PsiRound1(m) => serde_json::to_string(m),
            WireMessage::PsiRound2(m) => serde_json::to_string(m),
            WireMessage::InfectedUpload(m) => serde_json::to_string(m),
            WireMessage::InfectionReport(m) => serde_json::to_string(m),
            WireMessage::Notify(m) => serde_json::to_string(m),
        }
        .expect("wire structs serialize");
        format!("{} {}", self.type_tag(), body)
    }

    pub fn decode(line: &str) -> Result<Self> {
        let (tag, body) = line
            .split_once(' ')
            .ok_or_else(|| SimError::Wire("missing type tag".to_string()))?;
        let bad = |e: serde_json::Error| SimError::Wire(format!("{tag}: {e}"));
        Ok(match tag {
            "density_share_v1" => WireMessage::DensityShare(serde_json::from_str(body).map_err(bad)?),
            "density_sum_v1" => WireMessage::DensitySum(serde_json::from_str(body).map_err(bad)?),
            "psi_round1_v1" => WireMessage::PsiRound1(serde_json::from_str(body).map_err(bad)?),
            "psi_round2_v1" => WireMessage::PsiRound2(serde_json::from_str(body).map_err(bad)?),
            "infected_upload_v1" => {
                WireMessage::InfectedUpload(serde_json::from_str(body).map_err(bad)?)
            }
            "infection_report_v1" => {
                WireMessage::InfectionReport(serde_json::from_str(body).map_err(bad)?)
            }
            "notify_v1" => {
                let msg: NotifyV1 = serde_json::from_str(body).map_err(bad)?;
                if msg.bit > 1 {
                    return Err(SimError::Wire("notify bit must be 0 or 1".to_string()));
                }
                WireMessage::Notify(msg)
            }
            other => return Err(SimError::Wire(format!("unknown type tag '{other}'"))),
        })
    }
}

// Conversions between core values and their wire encodings.

pub fn encode_density_share(round: u64, share: &MaskShare) -> DensityShareV1 {
    DensityShareV1 {
        round,
        citizen_session: share.session.get(),
        indices: share.indices.iter().map(|c| c.get()).collect(),
        values: share.values.iter().map(FieldElement::to_hex).collect(),
    }
}

pub fn encode_density_masked(round: u64, share: &MaskedShare) -> DensityShareV1 {
    DensityShareV1 {
        round,
        citizen_session: share.session.get(),
        indices: share.indices.iter().map(|c| c.get()).collect(),
        values: share.values.iter().map(FieldElement::to_hex).collect(),
    }
}

fn decode_cells(indices: &[u32], m: u32) -> Result<Vec<CellIndex>> {
    indices
        .iter()
        .map(|&raw| CellIndex::new(raw, m).map_err(SimError::from))
        .collect()
}

fn decode_field_values(values: &[String], params: &FieldParams) -> Result<Vec<FieldElement>> {
    values
        .iter()
        .map(|hex| FieldElement::from_hex(hex, params).map_err(SimError::from))
        .collect()
}

pub fn decode_mask_share(msg: &DensityShareV1, m: u32, params: &FieldParams) -> Result<MaskShare> {
    Ok(MaskShare {
        session: SessionId::new(msg.citizen_session),
        indices: decode_cells(&msg.indices, m)?,
        values: decode_field_values(&msg.values, params)?,
    })
}

pub fn decode_masked_share(
    msg: &DensityShareV1,
    m: u32,
    params: &FieldParams,
) -> Result<MaskedShare> {
    Ok(MaskedShare {
        session: SessionId::new(msg.citizen_session),
        indices: decode_cells(&msg.indices, m)?,
        values: decode_field_values(&msg.values, params)?,
    })
}

pub fn encode_density_sum(round: u64, sum: &MaskSum) -> DensitySumV1 {
    DensitySumV1 {
        round,
        sessions: sum.sessions.iter().map(|s| s.get()).collect(),
        values: sum.values.iter().map(FieldElement::to_hex).collect(),
    }
}

pub fn decode_density_sum(msg: &DensitySumV1, params: &FieldParams) -> Result<MaskSum> {
    Ok(MaskSum {
        values: decode_field_values(&msg.values, params)?,
        sessions: msg.sessions.iter().map(|&s| SessionId::new(s)).collect(),
    })
}

fn mode_tag(mode: PsiMode) -> &'static str {
    match mode {
        PsiMode::Cardinality => "cardinality",
        PsiMode::Intersection => "intersection",
    }
}

fn parse_mode(tag: &str) -> Result<PsiMode> {
    match tag {
        "cardinality" => Ok(PsiMode::Cardinality),
        "intersection" => Ok(PsiMode::Intersection),
        other => Err(SimError::Wire(format!("unknown psi mode '{other}'"))),
    }
}

pub fn encode_psi_round1(session: u64, msg: &Round1Message) -> PsiRound1V1 {
    PsiRound1V1 {
        session,
        mode: mode_tag(msg.mode).to_string(),
        ciphertexts: msg.ciphertexts.iter().map(GroupElement::to_hex).collect(),
    }
}

pub fn decode_psi_round1(msg: &PsiRound1V1, params: &GroupParams) -> Result<Round1Message> {
    Ok(Round1Message {
        mode: parse_mode(&msg.mode)?,
        ciphertexts: msg
            .ciphertexts
            .iter()
            .map(|hex| GroupElement::from_hex(hex, params).map_err(SimError::from))
            .collect::<Result<Vec<_>>>()?,
    })
}

pub fn encode_psi_round2(session: u64, msg: &Round2Message) -> PsiRound2V1 {
    PsiRound2V1 {
        session,
        double_enc: msg.double_enc.iter().map(GroupElement::to_hex).collect(),
        sender_enc: msg.sender_enc.iter().map(GroupElement::to_hex).collect(),
    }
}

pub fn decode_psi_round2(msg: &PsiRound2V1, params: &GroupParams) -> Result<Round2Message> {
    let parse = |list: &[String]| -> Result<Vec<GroupElement>> {
        list.iter()
            .map(|hex| GroupElement::from_hex(hex, params).map_err(SimError::from))
            .collect()
    };
    Ok(Round2Message {
        double_enc: parse(&msg.double_enc)?,
        sender_enc: parse(&msg.sender_enc)?,
    })
}

pub fn encode_tokens(tokens: &BTreeSet<Token>) -> Vec<String> {
    tokens.iter().map(Token::to_hex).collect()
}

pub fn decode_tokens(list: &[String]) -> Result<BTreeSet<Token>> {
    list.iter()
        .map(|hex| Token::from_hex(hex).map_err(SimError::from))
        .collect()
}

pub fn encode_pairs(pairs: &BTreeSet<(Token, CellIndex)>) -> Vec<RaPairV1> {
    pairs
        .iter()
        .map(|(token, cell)| RaPairV1 {
            token: token.to_hex(),
            cell: cell.get(),
        })
        .collect()
}

pub fn decode_pairs(list: &[RaPairV1], m: u32) -> Result<BTreeSet<(Token, CellIndex)>> {
    list.iter()
        .map(|pair| {
            Ok((
                Token::from_hex(&pair.token)?,
                CellIndex::new(pair.cell, m)?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_round_trip_for_every_type() {
        let messages = vec![
            WireMessage::DensityShare(DensityShareV1 {
                round: 3,
                citizen_session: 7,
                indices: vec![1, 4],
                values: vec!["0a".into(), "00".into()],
            }),
            WireMessage::DensitySum(DensitySumV1 {
                round: 3,
                sessions: vec![7, 9],
                values: vec!["01".into()],
            }),
            WireMessage::PsiRound1(PsiRound1V1 {
                session: 1,
                mode: "cardinality".into(),
                ciphertexts: vec!["ff".into()],
            }),
            WireMessage::PsiRound2(PsiRound2V1 {
                session: 1,
                double_enc: vec!["ab".into()],
                sender_enc: vec![],
            }),
            WireMessage::InfectedUpload(InfectedUploadV1 {
                citizen_session: 2,
                tokens: vec!["00".repeat(16)],
                epoch: 40,
            }),
            WireMessage::InfectionReport(InfectionReportV1 {
                citizen_session: 2,
                tokens_l: None,
                ra_pairs: vec![RaPairV1 {
                    token: "11".repeat(16),
                    cell: 3,
                }],
                epoch: 41,
            }),
            WireMessage::Notify(NotifyV1 {
                citizen_session: 2,
                bit: 1,
            }),
        ];
        for msg in messages {
            let line = msg.encode();
            assert!(line.starts_with(msg.type_tag()));
            assert_eq!(WireMessage::decode(&line).unwrap(), msg);
        }
    }

    #[test]
    fn tokens_l_field_is_omitted_when_absent() {
        let without = WireMessage::InfectionReport(InfectionReportV1 {
            citizen_session: 1,
            tokens_l: None,
            ra_pairs: vec![],
            epoch: 1,
        });
        assert!(!without.encode().contains("tokens_L"));
        let with = WireMessage::InfectionReport(InfectionReportV1 {
            citizen_session: 1,
            tokens_l: Some(vec!["aa".repeat(16)]),
            ra_pairs: vec![],
            epoch: 1,
        });
        assert!(with.encode().contains("tokens_L"));
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(WireMessage::decode("nonsense {}").is_err());
        assert!(WireMessage::decode("no-space").is_err());
        // Structurally valid but carrying more than one bit.
        assert!(
            WireMessage::decode("notify_v1 {\"citizen_session\":1,\"bit\":2}").is_err()
        );
        assert!(
            WireMessage::decode("notify_v1 {\"citizen_session\":1,\"bit\":1}").is_ok()
        );
    }
}
