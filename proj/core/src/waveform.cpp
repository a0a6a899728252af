#include "echorec/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "echorec/errors.hpp"

namespace echorec {

double Waveform::rms() const {
    if (samples.empty()) return 0.0;
    double s = 0.0;
    for (double v : samples) s += v * v;
    return std::sqrt(s / static_cast<double>(samples.size()));
}

double Waveform::peak() const {
    double p = 0.0;
    for (double v : samples) p = std::max(p, std::fabs(v));
    return p;
}

void Waveform::validate() const {
    if (rate <= 0.0) raise(ErrorCode::InvalidConfig, "waveform rate must be positive");
    for (double v : samples)
        if (!(std::fabs(v) <= 1.0 + 1e-12))
            raise(ErrorCode::InvalidConfig, "waveform sample out of [-1, 1]");
}

namespace {

int16_t to_pcm16(double v) {
    double s = std::round(v * 32767.0);
    // symmetric clamp so int16 <-> double round-trips stay within [-1, 1]
    s = std::clamp(s, -32767.0, 32767.0);
    return static_cast<int16_t>(s);
}

void put_u32(std::ofstream& f, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ofstream& f, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 2);
}

uint32_t get_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) {
    return static_cast<uint16_t>(static_cast<uint32_t>(p[0]) |
                                 (static_cast<uint32_t>(p[1]) << 8));
}

}  // namespace

Waveform quantize16(const Waveform& w) {
    Waveform out;
    out.rate = w.rate;
    out.samples.resize(w.samples.size());
    for (size_t i = 0; i < w.samples.size(); ++i)
        out.samples[i] = static_cast<double>(to_pcm16(w.samples[i])) / 32767.0;
    return out;
}

void write_wav(const std::string& path, const Waveform& w) {
    if (w.rate != kSampleRate)
        raise(ErrorCode::SampleRateMismatch, "WAV export requires 44100 Hz");
    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open for write: " + path);

    const uint32_t n = static_cast<uint32_t>(w.samples.size());
    const uint32_t data_bytes = n * 2;
    f.write("RIFF", 4);
    put_u32(f, 36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put_u32(f, 16);
    put_u16(f, 1);  // PCM
    put_u16(f, 1);  // mono
    put_u32(f, 44100);
    put_u32(f, 44100 * 2);
    put_u16(f, 2);
    put_u16(f, 16);
    f.write("data", 4);
    put_u32(f, data_bytes);
    for (uint32_t i = 0; i < n; ++i) {
        const int16_t s = to_pcm16(w.samples[i]);
        const unsigned char b[2] = {static_cast<unsigned char>(s & 0xff),
                                    static_cast<unsigned char>((s >> 8) & 0xff)};
        f.write(reinterpret_cast<const char*>(b), 2);
    }
    if (!f) raise(ErrorCode::IoError, "short write: " + path);
}

Waveform read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        raise(ErrorCode::ParseError, path + ": not a RIFF/WAVE file");

    size_t pos = 12;
    bool have_fmt = false;
    uint16_t channels = 0, bits = 0, format = 0;
    uint32_t rate = 0;
    Waveform out;
    bool have_data = false;
    while (pos + 8 <= buf.size()) {
        const char* id = reinterpret_cast<const char*>(buf.data() + pos);
        const uint32_t size = get_u32(buf.data() + pos + 4);
        pos += 8;
        if (pos + size > buf.size())
            raise(ErrorCode::ParseError, path + ": truncated chunk");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16) raise(ErrorCode::ParseError, path + ": short fmt chunk");
            format = get_u16(buf.data() + pos);
            channels = get_u16(buf.data() + pos + 2);
            rate = get_u32(buf.data() + pos + 4);
            bits = get_u16(buf.data() + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            if (!have_fmt) raise(ErrorCode::ParseError, path + ": data before fmt");
            if (format != 1 || channels != 1 || bits != 16)
                raise(ErrorCode::ParseError, path + ": expected mono 16-bit PCM");
            if (rate != 44100)
                raise(ErrorCode::SampleRateMismatch, path + ": expected 44100 Hz");
            const size_t n = size / 2;
            out.samples.resize(n);
            for (size_t i = 0; i < n; ++i) {
                const uint16_t u = get_u16(buf.data() + pos + 2 * i);
                const double v = static_cast<double>(static_cast<int16_t>(u)) / 32767.0;
                out.samples[i] = std::clamp(v, -1.0, 1.0);
            }
            have_data = true;
        }
        pos += size + (size & 1);  // chunks are word-aligned
    }
    if (!have_data) raise(ErrorCode::ParseError, path + ": no data chunk");
    out.rate = kSampleRate;
    return out;
}

}  // namespace echorec
