#include "mammoth2/rewards/judge.hpp"

#include <cmath>

#include "httplib.h"
#include "json.hpp"

#include "mammoth2/errors.hpp"
#include "mammoth2/io/image_io.hpp"
#include "mammoth2/numerics/rng.hpp"

namespace m2::rewards {

using nlohmann::json;

std::string base64_encode(const void* data, size_t n) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (size_t i = 0; i < n; i += 3) {
        uint32_t chunk = static_cast<uint32_t>(bytes[i]) << 16;
        if (i + 1 < n) chunk |= static_cast<uint32_t>(bytes[i + 1]) << 8;
        if (i + 2 < n) chunk |= static_cast<uint32_t>(bytes[i + 2]);
        out.push_back(alphabet[(chunk >> 18) & 63]);
        out.push_back(alphabet[(chunk >> 12) & 63]);
        out.push_back(i + 1 < n ? alphabet[(chunk >> 6) & 63] : '=');
        out.push_back(i + 2 < n ? alphabet[chunk & 63] : '=');
    }
    return out;
}

JudgeClient::JudgeClient(Transport transport, int max_retries)
    : transport_(std::move(transport)), max_retries_(max_retries) {
    M2_CHECK_CFG(static_cast<bool>(transport_), "judge client needs a transport");
    M2_CHECK_CFG(max_retries_ >= 0, "judge client: negative retry count");
}

std::optional<JudgeDistribution> JudgeClient::score(const Image& source, const Image& edited,
                                                    const std::string& instruction) const {
    std::string src = io::ppm_bytes(source);
    std::string ed = io::ppm_bytes(edited);
    json request = {{"source", base64_encode(src.data(), src.size())},
                    {"edited", base64_encode(ed.data(), ed.size())},
                    {"instruction", instruction}};
    std::string body = request.dump();

    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        try {
            json reply = json::parse(transport_(body));
            const json& scores = reply.at("scores");
            JudgeDistribution dist;
            double total = 0.0;
            for (size_t s = 0; s < dist.p.size(); ++s) {
                auto it = scores.find(std::to_string(s));
                if (it == scores.end()) continue;
                double p = std::exp(it->get<double>());
                dist.p[s] = p;
                total += p;
            }
            if (!(total > 0.0) || !std::isfinite(total)) continue;  // degenerate reply
            for (double& p : dist.p) p /= total;
            return dist;
        } catch (const std::exception&) {
            // transport or parse failure: retry, then give up
        }
    }
    return std::nullopt;
}

JudgeClient::Transport stub_judge_transport(uint64_t seed) {
    return [seed](const std::string& request) {
        // a fixed distribution per (seed, request): deterministic but varied
        uint64_t key = seed;
        for (char c : request)
            key = numerics::hash_combine(key, static_cast<uint64_t>(static_cast<unsigned char>(c)));
        numerics::Rng rng(key);
        json scores;
        for (int s = 0; s <= 5; ++s)
            scores[std::to_string(s)] = -0.5 - 2.0 * rng.uniform();  // log-probs, unnormalized
        json reply = {{"scores", scores}};
        return reply.dump();
    };
}

JudgeClient::Transport http_judge_transport(const std::string& host, int port,
                                            const std::string& path) {
    M2_CHECK_CFG(port > 0 && port < 65536, "judge transport: port out of range");
    return [host, port, path](const std::string& request) -> std::string {
        httplib::Client client(host, port);
        auto res = client.Post(path, request, "application/json");
        if (!res) throw ValidationError("judge request failed: no response from " + host);
        if (res->status != 200)
            throw ValidationError("judge request failed: http " + std::to_string(res->status));
        return res->body;
    };
}

}  // namespace m2::rewards
