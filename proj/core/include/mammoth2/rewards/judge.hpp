#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "mammoth2/image.hpp"
#include "mammoth2/rewards/reward.hpp"

namespace m2::rewards {

// Standard base64 (RFC 4648, with padding).
std::string base64_encode(const void* data, size_t n);

// Edit-quality judge over (source, edited, instruction) triples.
//
// Exchange format: the request is a JSON object
//   {"source": <base64 ppm>, "edited": <base64 ppm>, "instruction": <text>}
// and the response a JSON object mapping candidate scores to log-probabilities
//   {"scores": {"0": lp0, ..., "5": lp5}}
// which the client converts to a distribution by exponentiation and
// normalization. Missing candidates get probability zero.
class JudgeClient {
public:
    // request json in, response json out; throw or return malformed text to
    // signal a transport failure
    using Transport = std::function<std::string(const std::string& request)>;

    explicit JudgeClient(Transport transport, int max_retries = 2);

    // nullopt after all retries fail: the caller drops the trajectory
    std::optional<JudgeDistribution> score(const Image& source, const Image& edited,
                                           const std::string& instruction) const;

private:
    Transport transport_;
    int max_retries_;
};

// Deterministic local stand-in: a seeded distribution keyed by the request
// content, for tests and offline runs.
JudgeClient::Transport stub_judge_transport(uint64_t seed);

// POSTs requests to http://host:port/path with content type application/json.
JudgeClient::Transport http_judge_transport(const std::string& host, int port,
                                            const std::string& path);

}  // namespace m2::rewards
