#include "fdr/trace.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace fdr {

namespace {

constexpr char kMagic[4] = {'F', 'D', 'R', 'T'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T)))
        throw ParseError(std::string("truncated packed trace: missing ") + what);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        value |= static_cast<T>(buf[i]) << (8 * i);
    return value;
}

OutcomeTrace load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    OutcomeTrace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line == "0")
            trace.outcomes.push_back(0);
        else if (line == "1")
            trace.outcomes.push_back(1);
        else
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected '0' or '1', got \"" + line + "\"");
    }
    if (trace.outcomes.empty())
        throw ParseError(path.string() + ": no outcomes found");
    return trace;
}

void save_csv(const OutcomeTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::uint8_t x : trace.outcomes) out << (x ? '1' : '0') << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

OutcomeTrace load_packed(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError(path.string() + ": bad magic, not a packed trace");
    auto version = read_le<std::uint16_t>(in, "version");
    if (version != kVersion)
        throw ParseError(path.string() + ": unsupported version " +
                         std::to_string(version));

    OutcomeTrace trace;
    trace.sample_period_us = read_le<std::uint32_t>(in, "sample_period_us");
    auto label_len = read_le<std::uint16_t>(in, "channel_label_len");
    trace.channel_label.resize(label_len);
    if (label_len > 0 && !in.read(trace.channel_label.data(), label_len))
        throw ParseError(path.string() + ": truncated channel label");
    auto count = read_le<std::uint64_t>(in, "outcome_count");
    if (count == 0) throw ParseError(path.string() + ": zero outcome count");

    const std::uint64_t n_bytes = (count + 7) / 8;
    std::vector<unsigned char> payload(n_bytes);
    if (!in.read(reinterpret_cast<char*>(payload.data()),
                 static_cast<std::streamsize>(n_bytes)))
        throw ParseError(path.string() + ": truncated bit payload, expected " +
                         std::to_string(n_bytes) + " bytes");

    trace.outcomes.resize(count);
    for (std::uint64_t i = 0; i < count; ++i)
        trace.outcomes[i] = (payload[i / 8] >> (i % 8)) & 1;  // LSB-first
    return trace;
}

void save_packed(const OutcomeTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());

    out.write(kMagic, 4);
    write_le<std::uint16_t>(out, kVersion);
    write_le<std::uint32_t>(out, trace.sample_period_us);
    if (trace.channel_label.size() > 0xffff)
        throw ParseError("channel label longer than 65535 bytes");
    write_le<std::uint16_t>(out,
                            static_cast<std::uint16_t>(trace.channel_label.size()));
    out.write(trace.channel_label.data(),
              static_cast<std::streamsize>(trace.channel_label.size()));
    write_le<std::uint64_t>(out, trace.outcomes.size());

    std::vector<unsigned char> payload((trace.outcomes.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < trace.outcomes.size(); ++i)
        if (trace.outcomes[i]) payload[i / 8] |= 1u << (i % 8);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace

void OutcomeTrace::validate() const {
    if (outcomes.empty()) throw ParseError("trace must contain at least one outcome");
    if (sample_period_us == 0) throw ParseError("sample period must be positive");
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        if (outcomes[i] > 1)
            throw ParseError("non-binary outcome at index " + std::to_string(i));
}

OutcomeTrace load_trace(const std::filesystem::path& path, TraceFormat format) {
    OutcomeTrace trace =
        format == TraceFormat::csv ? load_csv(path) : load_packed(path);
    trace.validate();
    return trace;
}

void save_trace(const OutcomeTrace& trace, const std::filesystem::path& path,
                TraceFormat format) {
    trace.validate();
    if (format == TraceFormat::csv)
        save_csv(trace, path);
    else
        save_packed(trace, path);
}

OutcomeTrace slice(const OutcomeTrace& trace, std::size_t start, std::size_t end) {
    if (start >= end || end > trace.outcomes.size())
        throw ParseError("invalid slice [" + std::to_string(start) + ", " +
                         std::to_string(end) + ") of trace with " +
                         std::to_string(trace.outcomes.size()) + " outcomes");
    OutcomeTrace out = trace;
    out.outcomes.assign(trace.outcomes.begin() + static_cast<std::ptrdiff_t>(start),
                        trace.outcomes.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

TraceFormat format_from_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (ext == ".fdrt") return TraceFormat::packed;
    if (ext == ".csv") return TraceFormat::csv;
    throw ParseError("cannot infer trace format from extension \"" + ext +
                     "\" (use .fdrt or .csv, or pass --format)");
}

}  // namespace fdr
