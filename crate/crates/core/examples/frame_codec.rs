// Encodes the frames a multipath connection exchanges and decodes them back.

use mpquic_sim::wire::{
    decode_frames, encoded_len, AckFrame, ConnectionId, Frame, StreamFrame, MAX_FRAME_BYTES,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for v in [37u64, 15_293, 494_878_333, 151_288_809_941_952_652] {
        println!("varint {v:>20} takes {} bytes", encoded_len(v));
    }

    let ack = AckFrame::from_ranges(&[(7, 7), (5, 5), (0, 3)], 2_000)?;
    let payload = StreamFrame::max_payload(0, 1_048_576, MAX_FRAME_BYTES).unwrap_or(0);
    let frames = vec![
        Frame::AckMp { path_id: 1, ack },
        Frame::Stream(StreamFrame {
            stream_id: 0,
            offset: 1_048_576,
            len: payload - 64,
            fin: false,
        }),
        Frame::PathChallenge { data: *b"8 bytes!" },
        Frame::NewConnectionId {
            seq: 2,
            retire_prior_to: 0,
            cid: ConnectionId::new([0xab; 8]),
            reset_token: [0x5a; 16],
        },
        Frame::AckFrequency {
            seq: 0,
            packet_threshold: 10,
            max_ack_delay_us: 25_000,
            ignore_reorder: true,
        },
    ];

    let mut buf = Vec::new();
    for f in &frames {
        f.encode(&mut buf)?;
        println!("{:#04x} {:>5} bytes", f.type_code(), f.encoded_len());
    }
    let back = decode_frames(&buf)?;
    assert_eq!(back, frames);
    if let Frame::AckMp { ack, .. } = &back[0] {
        println!(
            "ACK_MP ranges {:?}, delay {} us",
            ack.ranges()?,
            ack.ack_delay_micros()
        );
    }
    println!("{} bytes total, round trip ok", buf.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
