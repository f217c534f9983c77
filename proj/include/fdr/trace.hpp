#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdr {

// Parse/validation problems in input data or arguments.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem-level failures (open, read, write).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TraceOrigin { measured, synthetic };
enum class TraceFormat { csv, packed };

/// An ordered sequence of binary probe outcomes sampled at a fixed period.
/// Immutable by convention after construction; index i and the sample
/// period together define time.
struct OutcomeTrace {
    std::vector<std::uint8_t> outcomes;        // each exactly 0 or 1
    std::uint32_t sample_period_us = 500000;   // T_s, default 0.5 s
    std::string channel_label;
    TraceOrigin origin = TraceOrigin::measured;
    std::uint64_t seed = 0;                    // generator seed when synthetic

    std::size_t size() const { return outcomes.size(); }

    // Throws ParseError if any invariant is violated.
    void validate() const;
};

OutcomeTrace load_trace(const std::filesystem::path& path, TraceFormat format);
void save_trace(const OutcomeTrace& trace, const std::filesystem::path& path,
                TraceFormat format);

// Contiguous sub-trace [start, end); metadata preserved.
OutcomeTrace slice(const OutcomeTrace& trace, std::size_t start, std::size_t end);

// ".fdrt" -> packed, ".csv" -> csv; anything else throws ParseError.
TraceFormat format_from_extension(const std::filesystem::path& path);

}  // namespace fdr
