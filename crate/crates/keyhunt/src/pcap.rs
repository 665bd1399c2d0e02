//! Classic pcap reading and writing, just enough for SSH session captures:
//! Ethernet + IPv4 + TCP, both magic endiannesses, sequence-ordered stream
//! reassembly and location of the first encrypted packet after NEWKEYS.

use std::path::Path;

use crate::error::{Error, Result};
use crate::packet::{Direction, ValidationPacket};

const MAGIC_NATIVE: u32 = 0xa1b2_c3d4;
const MAGIC_SWAPPED: u32 = 0xd4c3_b2a1;
const LINKTYPE_ETHERNET: u32 = 1;
const SSH_MSG_NEWKEYS: u8 = 21;

/// One application payload to place on the wire.
#[derive(Debug, Clone)]
pub struct ConversationFrame {
    pub direction: Direction,
    pub payload: Vec<u8>,
}

/// Writer knobs; defaults produce a native-endian capture on port 22 with
/// one TCP segment per conversation frame.
#[derive(Debug, Clone)]
pub struct PcapOptions {
    pub tcp_port: u16,
    pub swapped_magic: bool,
    /// Split payloads into segments of at most this size.
    pub segment_size: Option<usize>,
}

impl Default for PcapOptions {
    fn default() -> Self {
        PcapOptions {
            tcp_port: 22,
            swapped_magic: false,
            segment_size: None,
        }
    }
}

struct Endpoint {
    mac: [u8; 6],
    ip: [u8; 4],
    port: u16,
    seq: u32,
}

/// Serialize a client/server TCP conversation as a classic pcap capture,
/// including the three-way handshake.
pub fn write_conversation(frames: &[ConversationFrame], opts: &PcapOptions) -> Vec<u8> {
    let mut out = Vec::new();
    let put_u32 = |out: &mut Vec<u8>, v: u32, swapped: bool| {
        out.extend_from_slice(&if swapped {
            v.to_be_bytes()
        } else {
            v.to_le_bytes()
        });
    };
    let put_u16 = |out: &mut Vec<u8>, v: u16, swapped: bool| {
        out.extend_from_slice(&if swapped {
            v.to_be_bytes()
        } else {
            v.to_le_bytes()
        });
    };
    let sw = opts.swapped_magic;
    put_u32(&mut out, MAGIC_NATIVE, sw);
    put_u16(&mut out, 2, sw);
    put_u16(&mut out, 4, sw);
    put_u32(&mut out, 0, sw); // thiszone
    put_u32(&mut out, 0, sw); // sigfigs
    put_u32(&mut out, 65535, sw);
    put_u32(&mut out, LINKTYPE_ETHERNET, sw);

    let mut client = Endpoint {
        mac: [2, 0, 0, 0, 0, 1],
        ip: [10, 0, 0, 2],
        port: 43210,
        seq: 0x1000_0000,
    };
    let mut server = Endpoint {
        mac: [2, 0, 0, 0, 0, 2],
        ip: [10, 0, 0, 1],
        port: opts.tcp_port,
        seq: 0x2000_0000,
    };
    let mut ts = 0u32;
    let mut record = |out: &mut Vec<u8>, frame: Vec<u8>| {
        put_u32(out, 1_700_000_000, sw);
        put_u32(out, ts, sw);
        put_u32(out, frame.len() as u32, sw);
        put_u32(out, frame.len() as u32, sw);
        out.extend_from_slice(&frame);
        ts += 1000;
    };

    // handshake: SYN, SYN/ACK, ACK
    let syn = tcp_frame(&client, &server, client.seq, 0, 0x02, &[]);
    client.seq = client.seq.wrapping_add(1);
    record(&mut out, syn);
    let syn_ack = tcp_frame(&server, &client, server.seq, client.seq, 0x12, &[]);
    server.seq = server.seq.wrapping_add(1);
    record(&mut out, syn_ack);
    record(
        &mut out,
        tcp_frame(&client, &server, client.seq, server.seq, 0x10, &[]),
    );

    for frame in frames {
        let chunks: Vec<&[u8]> = match opts.segment_size {
            Some(size) if size > 0 => frame.payload.chunks(size).collect(),
            _ => vec![frame.payload.as_slice()],
        };
        for chunk in chunks {
            let (src, dst) = match frame.direction {
                Direction::ClientToServer => (&mut client, &mut server),
                Direction::ServerToClient => (&mut server, &mut client),
            };
            let wire = tcp_frame(src, dst, src.seq, dst.seq, 0x18, chunk);
            src.seq = src.seq.wrapping_add(chunk.len() as u32);
            record(&mut out, wire);
        }
    }
    out
}

fn tcp_frame(
    src: &Endpoint,
    dst: &Endpoint,
    seq: u32,
    ack: u32,
    flags: u8,
    payload: &[u8],
) -> Vec<u8> {
    let mut tcp = Vec::with_capacity(20 + payload.len());
    tcp.extend_from_slice(&src.port.to_be_bytes());
    tcp.extend_from_slice(&dst.port.to_be_bytes());
    tcp.extend_from_slice(&seq.to_be_bytes());
    tcp.extend_from_slice(&ack.to_be_bytes());
    tcp.push(0x50); // data offset 5 words
    tcp.push(flags);
    tcp.extend_from_slice(&0xffffu16.to_be_bytes());
    tcp.extend_from_slice(&[0, 0]); // checksum placeholder
    tcp.extend_from_slice(&[0, 0]); // urgent
    tcp.extend_from_slice(payload);
    let tcp_checksum = tcp_pseudo_checksum(&src.ip, &dst.ip, &tcp);
    tcp[16..18].copy_from_slice(&tcp_checksum.to_be_bytes());

    let total_len = 20 + tcp.len();
    let mut ip = Vec::with_capacity(total_len);
    ip.push(0x45);
    ip.push(0);
    ip.extend_from_slice(&(total_len as u16).to_be_bytes());
    ip.extend_from_slice(&[0, 0]); // identification
    ip.extend_from_slice(&0x4000u16.to_be_bytes()); // DF
    ip.push(64);
    ip.push(6); // TCP
    ip.extend_from_slice(&[0, 0]); // checksum placeholder
    ip.extend_from_slice(&src.ip);
    ip.extend_from_slice(&dst.ip);
    let ip_checksum = ones_complement_sum(&ip);
    ip[10..12].copy_from_slice(&ip_checksum.to_be_bytes());
    ip.extend_from_slice(&tcp);

    let mut eth = Vec::with_capacity(14 + ip.len());
    eth.extend_from_slice(&dst.mac);
    eth.extend_from_slice(&src.mac);
    eth.extend_from_slice(&0x0800u16.to_be_bytes());
    eth.extend_from_slice(&ip);
    eth
}

fn ones_complement_sum(bytes: &[u8]) -> u16 {
    let mut sum = 0u32;
    for pair in bytes.chunks(2) {
        let word = if pair.len() == 2 {
            u16::from_be_bytes([pair[0], pair[1]])
        } else {
            u16::from_be_bytes([pair[0], 0])
        };
        sum += u32::from(word);
    }
    while sum >> 16 != 0 {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

fn tcp_pseudo_checksum(src: &[u8; 4], dst: &[u8; 4], tcp: &[u8]) -> u16 {
    let mut pseudo = Vec::with_capacity(12 + tcp.len());
    pseudo.extend_from_slice(src);
    pseudo.extend_from_slice(dst);
    pseudo.push(0);
    pseudo.push(6);
    pseudo.extend_from_slice(&(tcp.len() as u16).to_be_bytes());
    pseudo.extend_from_slice(tcp);
    ones_complement_sum(&pseudo)
}

struct Segment {
    rel_seq: u32,
    data: Vec<u8>,
    frame_index: usize,
}

#[derive(Default)]
struct DirectionState {
    isn: Option<u32>,
    fallback_base: Option<u32>,
    segments: Vec<Segment>,
}

struct ReassembledStream {
    bytes: Vec<u8>,
    /// Capture index of the frame that contributed each byte.
    frame_of: Vec<usize>,
}

/// Pull the first post-NEWKEYS packet for `direction` out of a capture.
///
/// The packet boundary is the remainder of the same-direction segment run up
/// to the next opposite-direction payload, truncated to a block multiple of
/// the cipher, so the resulting [`ValidationPacket`] has a known boundary.
pub fn extract_first_encrypted_packet(
    path: &Path,
    tcp_port: u16,
    direction: Direction,
    cipher_name: &str,
) -> Result<ValidationPacket> {
    let spec = crate::cipher::lookup_cipher(cipher_name)?;
    let raw = std::fs::read(path)?;
    let frames = parse_capture(&raw, tcp_port)?;

    let mut streams = [DirectionState::default(), DirectionState::default()];
    for (index, (dir, seq, syn, payload)) in frames.iter().enumerate() {
        let state = &mut streams[*dir as usize];
        if *syn {
            state.isn = Some(*seq);
            continue;
        }
        if payload.is_empty() {
            continue;
        }
        let base = match state.isn {
            Some(isn) => isn.wrapping_add(1),
            None => *state.fallback_base.get_or_insert(*seq),
        };
        state.segments.push(Segment {
            rel_seq: seq.wrapping_sub(base),
            data: payload.clone(),
            frame_index: index,
        });
    }

    let stream = reassemble(&mut streams[direction as usize])?;
    if stream.bytes.is_empty() {
        return Err(Error::NoNewkeysFound);
    }

    let banner_end = skip_version_banner(&stream.bytes);
    let (enc_start, packets_before) = find_newkeys(&stream.bytes, banner_end)?;

    // end of the same-direction segment run in capture order
    let first_frame = *stream
        .frame_of
        .get(enc_start)
        .ok_or(Error::TruncatedCapture)?;
    let switch = frames
        .iter()
        .enumerate()
        .position(|(i, (dir, _, _, payload))| {
            i > first_frame && *dir != direction && !payload.is_empty()
        });
    let run_end = match switch {
        Some(sw) => stream
            .frame_of
            .iter()
            .rposition(|&f| f < sw)
            .map(|p| p + 1)
            .unwrap_or(stream.bytes.len()),
        None => stream.bytes.len(),
    };
    if run_end <= enc_start {
        return Err(Error::TruncatedCapture);
    }
    let block = spec.block_len.max(16);
    let usable = (run_end - enc_start) / block * block;
    if usable == 0 {
        return Err(Error::TruncatedCapture);
    }
    ValidationPacket::new(
        stream.bytes[enc_start..enc_start + usable].to_vec(),
        spec.name,
        direction,
        packets_before,
        true,
    )
}

type ParsedFrame = (Direction, u32, bool, Vec<u8>);

fn parse_capture(raw: &[u8], tcp_port: u16) -> Result<Vec<ParsedFrame>> {
    if raw.len() < 24 {
        return Err(Error::TruncatedCapture);
    }
    let magic = u32::from_le_bytes(raw[0..4].try_into().unwrap());
    let swapped = match magic {
        MAGIC_NATIVE => false,
        MAGIC_SWAPPED => true,
        other => {
            return Err(Error::InvalidPacket(format!(
                "not a classic pcap capture (magic {other:#x})"
            )))
        }
    };
    let read_u32 = |bytes: &[u8]| -> u32 {
        let arr: [u8; 4] = bytes.try_into().unwrap();
        if swapped {
            u32::from_be_bytes(arr)
        } else {
            u32::from_le_bytes(arr)
        }
    };
    let linktype = read_u32(&raw[20..24]);
    if linktype != LINKTYPE_ETHERNET {
        return Err(Error::UnsupportedLinkType(linktype));
    }

    let mut frames = Vec::new();
    let mut pos = 24;
    while pos < raw.len() {
        if pos + 16 > raw.len() {
            return Err(Error::TruncatedCapture);
        }
        let incl_len = read_u32(&raw[pos + 8..pos + 12]) as usize;
        pos += 16;
        if pos + incl_len > raw.len() {
            return Err(Error::TruncatedCapture);
        }
        let frame = &raw[pos..pos + incl_len];
        pos += incl_len;
        if let Some(parsed) = parse_ethernet_tcp(frame, tcp_port) {
            frames.push(parsed);
        }
    }
    Ok(frames)
}

fn parse_ethernet_tcp(frame: &[u8], tcp_port: u16) -> Option<ParsedFrame> {
    if frame.len() < 14 + 20 + 20 {
        return None;
    }
    let ethertype = u16::from_be_bytes([frame[12], frame[13]]);
    if ethertype != 0x0800 {
        return None;
    }
    let ip = &frame[14..];
    if ip[0] >> 4 != 4 {
        return None;
    }
    let ihl = usize::from(ip[0] & 0x0f) * 4;
    let total_len = usize::from(u16::from_be_bytes([ip[2], ip[3]]));
    if ip[9] != 6 || ip.len() < total_len || total_len < ihl + 20 {
        return None;
    }
    let tcp = &ip[ihl..total_len];
    let src_port = u16::from_be_bytes([tcp[0], tcp[1]]);
    let dst_port = u16::from_be_bytes([tcp[2], tcp[3]]);
    let direction = if dst_port == tcp_port {
        Direction::ClientToServer
    } else if src_port == tcp_port {
        Direction::ServerToClient
    } else {
        return None;
    };
    let seq = u32::from_be_bytes([tcp[4], tcp[5], tcp[6], tcp[7]]);
    let data_offset = usize::from(tcp[12] >> 4) * 4;
    if tcp.len() < data_offset {
        return None;
    }
    let syn = tcp[13] & 0x02 != 0;
    Some((direction, seq, syn, tcp[data_offset..].to_vec()))
}

fn reassemble(state: &mut DirectionState) -> Result<ReassembledStream> {
    state.segments.sort_by_key(|s| s.rel_seq);
    let mut bytes = Vec::new();
    let mut frame_of = Vec::new();
    for seg in &state.segments {
        let rel = seg.rel_seq as usize;
        if rel > bytes.len() {
            // gap in the capture
            return Err(Error::TruncatedCapture);
        }
        let skip = bytes.len() - rel;
        if skip >= seg.data.len() {
            continue; // full retransmission overlap
        }
        bytes.extend_from_slice(&seg.data[skip..]);
        frame_of.resize(bytes.len(), seg.frame_index);
    }
    Ok(ReassembledStream { bytes, frame_of })
}

/// Consume leading text lines through the one starting with "SSH-".
fn skip_version_banner(stream: &[u8]) -> usize {
    let mut pos = 0;
    while pos < stream.len() {
        let line_end = match stream[pos..].iter().position(|&b| b == b'\n') {
            Some(i) => pos + i + 1,
            None => return 0,
        };
        let line = &stream[pos..line_end];
        if !line[..line.len() - 1]
            .iter()
            .all(|&b| b == b'\r' || (0x20..0x7f).contains(&b))
        {
            // binary data: no banner in this stream
            return 0;
        }
        if line.starts_with(b"SSH-") {
            return line_end;
        }
        pos = line_end;
    }
    0
}

/// Walk cleartext BPP packets until NEWKEYS; returns the stream offset right
/// after it and the number of packets seen (NEWKEYS included), which is the
/// SSH sequence number of the first encrypted packet.
fn find_newkeys(stream: &[u8], mut pos: usize) -> Result<(usize, u32)> {
    let mut packets = 0u32;
    while pos + 6 <= stream.len() {
        let packet_length = u32::from_be_bytes(stream[pos..pos + 4].try_into().unwrap()) as usize;
        if !(5..=35_000).contains(&packet_length) || pos + 4 + packet_length > stream.len() {
            return Err(Error::NoNewkeysFound);
        }
        let msg_type = stream[pos + 5];
        packets += 1;
        pos += 4 + packet_length;
        if msg_type == SSH_MSG_NEWKEYS {
            return Ok((pos, packets));
        }
    }
    Err(Error::NoNewkeysFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::frame_bpp;

    fn banner(which: &str) -> Vec<u8> {
        format!("SSH-2.0-{which}\r\n").into_bytes()
    }

    fn cleartext(msg_type: u8, body_len: usize) -> Vec<u8> {
        let payload: Vec<u8> = std::iter::once(msg_type)
            .chain((0..body_len).map(|i| i as u8))
            .collect();
        frame_bpp(&payload, 8, |n| vec![0u8; n])
    }

    fn session_frames(encrypted: &[u8]) -> Vec<ConversationFrame> {
        use Direction::*;
        vec![
            ConversationFrame {
                direction: ClientToServer,
                payload: banner("client"),
            },
            ConversationFrame {
                direction: ServerToClient,
                payload: banner("server"),
            },
            ConversationFrame {
                direction: ClientToServer,
                payload: cleartext(20, 40),
            },
            ConversationFrame {
                direction: ServerToClient,
                payload: cleartext(20, 40),
            },
            ConversationFrame {
                direction: ClientToServer,
                payload: cleartext(30, 32),
            },
            ConversationFrame {
                direction: ServerToClient,
                payload: cleartext(31, 96),
            },
            ConversationFrame {
                direction: ClientToServer,
                payload: cleartext(21, 0),
            },
            ConversationFrame {
                direction: ServerToClient,
                payload: cleartext(21, 0),
            },
            ConversationFrame {
                direction: ClientToServer,
                payload: encrypted.to_vec(),
            },
        ]
    }

    #[test]
    fn extracts_encrypted_packet_and_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let encrypted: Vec<u8> = (0..64u8).map(|i| i.wrapping_mul(37)).collect();
        for (name, opts) in [
            ("native.pcap", PcapOptions::default()),
            (
                "swapped.pcap",
                PcapOptions {
                    swapped_magic: true,
                    ..Default::default()
                },
            ),
            (
                "segmented.pcap",
                PcapOptions {
                    segment_size: Some(13),
                    ..Default::default()
                },
            ),
        ] {
            let path = dir.path().join(name);
            std::fs::write(
                &path,
                write_conversation(&session_frames(&encrypted), &opts),
            )
            .unwrap();
            let packet =
                extract_first_encrypted_packet(&path, 22, Direction::ClientToServer, "aes128-ctr")
                    .unwrap();
            assert_eq!(packet.ciphertext, encrypted, "{name}");
            // client sent KEXINIT, KEXDH_INIT, NEWKEYS before this packet
            assert_eq!(packet.sequence_number, 3, "{name}");
            assert!(packet.boundary_known);
        }
    }

    #[test]
    fn banner_only_capture_has_no_newkeys() {
        let dir = tempfile::tempdir().unwrap();
        let frames = vec![
            ConversationFrame {
                direction: Direction::ClientToServer,
                payload: banner("client"),
            },
            ConversationFrame {
                direction: Direction::ServerToClient,
                payload: banner("server"),
            },
        ];
        let path = dir.path().join("banners.pcap");
        std::fs::write(&path, write_conversation(&frames, &PcapOptions::default())).unwrap();
        let err =
            extract_first_encrypted_packet(&path, 22, Direction::ClientToServer, "aes128-ctr")
                .unwrap_err();
        assert!(matches!(err, Error::NoNewkeysFound));
    }

    #[test]
    fn truncated_capture_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let encrypted: Vec<u8> = (0..64u8).collect();
        let mut bytes = write_conversation(&session_frames(&encrypted), &PcapOptions::default());
        bytes.truncate(bytes.len() - 30);
        let path = dir.path().join("cut.pcap");
        std::fs::write(&path, &bytes).unwrap();
        let err =
            extract_first_encrypted_packet(&path, 22, Direction::ClientToServer, "aes128-ctr")
                .unwrap_err();
        assert!(matches!(err, Error::TruncatedCapture));
    }

    #[test]
    fn non_pcap_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nope.bin");
        std::fs::write(&path, vec![7u8; 128]).unwrap();
        let err =
            extract_first_encrypted_packet(&path, 22, Direction::ClientToServer, "aes128-ctr")
                .unwrap_err();
        assert!(matches!(err, Error::InvalidPacket(_)));
    }

    #[test]
    fn server_direction_extraction() {
        let dir = tempfile::tempdir().unwrap();
        let encrypted: Vec<u8> = (0..48u8).map(|i| i ^ 0xa5).collect();
        let mut frames = session_frames(&[0u8; 32]);
        frames.push(ConversationFrame {
            direction: Direction::ServerToClient,
            payload: encrypted.to_vec(),
        });
        let path = dir.path().join("server.pcap");
        std::fs::write(&path, write_conversation(&frames, &PcapOptions::default())).unwrap();
        let packet =
            extract_first_encrypted_packet(&path, 22, Direction::ServerToClient, "aes128-ctr")
                .unwrap();
        assert_eq!(packet.ciphertext, encrypted);
        assert_eq!(packet.sequence_number, 3);
    }
}
