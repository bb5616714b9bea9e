#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "microeval/digest.hpp"
#include "microeval/errors.hpp"
#include "microeval/strings.hpp"

namespace microeval {

// ─── Requests and results ──────────────────────────────────────────────

enum class DecodeMode { Greedy, Sample };

inline std::string to_string(DecodeMode mode) {
    return mode == DecodeMode::Greedy ? "greedy" : "sample";
}

struct CompletionRequest {
    std::string model_id;
    std::string prompt;
    DecodeMode decode_mode = DecodeMode::Greedy;
    double temperature = 0.0;
    std::uint64_t seed = 0;
    int max_tokens = 1024;
};

struct CompletionResult {
    std::string text;
};

struct TokenScore {
    std::string token;
    // Backends commonly report no logprob for the first token of a sequence.
    std::optional<double> logprob;
};

struct ScoreResult {
    std::vector<TokenScore> tokens;
};

// Greedy decoding ignores temperature and seed, so all greedy requests for
// the same prompt collapse onto one canonical form (and one cache entry).
inline CompletionRequest canonical_request(CompletionRequest req) {
    if (req.decode_mode == DecodeMode::Greedy) {
        req.temperature = 0.0;
        req.seed = 0;
    }
    return req;
}

inline std::string completion_cache_key(const CompletionRequest& req) {
    const CompletionRequest canon = canonical_request(req);
    char temp[32];
    std::snprintf(temp, sizeof temp, "%.6f", canon.temperature);
    std::string blob = "complete";
    for (const std::string& part :
         {canon.model_id, to_string(canon.decode_mode), std::string(temp),
          std::to_string(canon.seed), std::to_string(canon.max_tokens), canon.prompt}) {
        blob += '\0';
        blob += part;
    }
    return sha256_hex(blob);
}

inline std::string score_cache_key(const std::string& model_id, const std::string& text) {
    std::string blob = "score";
    blob += '\0';
    blob += model_id;
    blob += '\0';
    blob += text;
    return sha256_hex(blob);
}

// ─── Backend interface ─────────────────────────────────────────────────

class ModelBackend {
  public:
    virtual ~ModelBackend() = default;
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
    virtual ScoreResult score_tokens(const std::string& model_id, const std::string& text) = 0;
};

// ─── Concurrency helpers ───────────────────────────────────────────────

class Semaphore {
  public:
    explicit Semaphore(size_t count) : count_(count) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return count_ > 0; });
        --count_;
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            ++count_;
        }
        cv_.notify_one();
    }

  private:
    std::mutex mutex_;
    std::condition_variable cv_;
    size_t count_;
};

class SemaphoreGuard {
  public:
    explicit SemaphoreGuard(Semaphore& sem) : sem_(sem) { sem_.acquire(); }
    ~SemaphoreGuard() { sem_.release(); }
    SemaphoreGuard(const SemaphoreGuard&) = delete;
    SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

  private:
    Semaphore& sem_;
};

// Runs fn(0) .. fn(n - 1) on up to `workers` threads. The first exception
// to escape a call is rethrown on the calling thread after all workers join.
inline void parallel_for(size_t n, size_t workers, const std::function<void(size_t)>& fn) {
    if (n == 0) return;
    workers = std::min(std::max<size_t>(workers, 1), n);
    if (workers == 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ─── Gateway ───────────────────────────────────────────────────────────

struct GatewayConfig {
    // Empty path disables the on-disk cache.
    std::filesystem::path cache_dir;
    // Extra attempts after the first; only transport errors, 429 and 5xx
    // responses are retried.
    int retry_limit = 3;
    std::chrono::milliseconds base_delay{250};
    std::chrono::milliseconds max_delay{4000};
    size_t max_in_flight = 4;
};

struct GatewayCounters {
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t backend_calls = 0;
    std::uint64_t retries = 0;
};

// Serializes every model interaction: checks the content-addressed cache,
// throttles concurrent backend calls, retries transient failures with
// exponentially backed-off jittered delays, and persists fresh results.
class Gateway {
  public:
    using SleepFn = std::function<void(std::chrono::milliseconds)>;

    Gateway(std::shared_ptr<ModelBackend> backend, GatewayConfig config)
        : backend_(std::move(backend)),
          config_(std::move(config)),
          slots_(std::max<size_t>(config_.max_in_flight, 1)),
          rng_(std::random_device{}()),
          sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
        if (!backend_) throw PreconditionError("gateway requires a backend");
        if (config_.retry_limit < 0) throw PreconditionError("retry limit must be >= 0");
    }

    // Test hook: replaces the real sleep so backoff can be observed instantly.
    void set_sleep_fn(SleepFn fn) { sleep_ = std::move(fn); }

    CompletionResult complete(const CompletionRequest& request) {
        const CompletionRequest canon = canonical_request(request);
        const std::string key = completion_cache_key(canon);
        if (auto cached = read_cache(key)) {
            if (cached->contains("text")) {
                ++counters_.cache_hits;
                return CompletionResult{cached->at("text").get<std::string>()};
            }
        }
        ++counters_.cache_misses;
        CompletionResult result;
        {
            SemaphoreGuard guard(slots_);
            result = with_retries([&] { return backend_->complete(canon); });
        }
        write_cache(key, nlohmann::json{{"kind", "complete"},
                                        {"model_id", canon.model_id},
                                        {"text", result.text}});
        return result;
    }

    ScoreResult score_tokens(const std::string& model_id, const std::string& text) {
        const std::string key = score_cache_key(model_id, text);
        if (auto cached = read_cache(key)) {
            if (cached->contains("tokens")) {
                ++counters_.cache_hits;
                ScoreResult result;
                for (const auto& entry : cached->at("tokens")) {
                    TokenScore score;
                    score.token = entry.at("token").get<std::string>();
                    if (!entry.at("logprob").is_null())
                        score.logprob = entry.at("logprob").get<double>();
                    result.tokens.push_back(std::move(score));
                }
                return result;
            }
        }
        ++counters_.cache_misses;
        ScoreResult result;
        {
            SemaphoreGuard guard(slots_);
            result = with_retries([&] { return backend_->score_tokens(model_id, text); });
        }
        nlohmann::json tokens = nlohmann::json::array();
        for (const auto& score : result.tokens) {
            nlohmann::json entry{{"token", score.token}};
            if (score.logprob)
                entry["logprob"] = *score.logprob;
            else
                entry["logprob"] = nullptr;
            tokens.push_back(std::move(entry));
        }
        write_cache(key, nlohmann::json{{"kind", "score"},
                                        {"model_id", model_id},
                                        {"tokens", std::move(tokens)}});
        return result;
    }

    GatewayCounters counters() const {
        GatewayCounters snapshot;
        snapshot.cache_hits = counters_.cache_hits.load();
        snapshot.cache_misses = counters_.cache_misses.load();
        snapshot.backend_calls = counters_.backend_calls.load();
        snapshot.retries = counters_.retries.load();
        return snapshot;
    }

    size_t max_in_flight() const { return std::max<size_t>(config_.max_in_flight, 1); }

    std::chrono::milliseconds delay_for_attempt(int attempt) {
        auto delay = config_.base_delay;
        for (int i = 0; i < attempt && delay < config_.max_delay; ++i) delay *= 2;
        delay = std::min(delay, config_.max_delay);
        double factor;
        {
            std::lock_guard lock(rng_mutex_);
            factor = std::uniform_real_distribution<double>(0.5, 1.5)(rng_);
        }
        return std::chrono::milliseconds(
            static_cast<std::chrono::milliseconds::rep>(delay.count() * factor));
    }

  private:
    template <typename Fn>
    auto with_retries(Fn&& fn) -> decltype(fn()) {
        for (int attempt = 0;; ++attempt) {
            ++counters_.backend_calls;
            try {
                return fn();
            } catch (const BackendError& e) {
                if (!e.retryable() || attempt >= config_.retry_limit) throw;
                ++counters_.retries;
                sleep_(delay_for_attempt(attempt));
            }
        }
    }

    std::filesystem::path cache_path(const std::string& key) const {
        return config_.cache_dir / key.substr(0, 2) / (key + ".json");
    }

    std::optional<nlohmann::json> read_cache(const std::string& key) const {
        if (config_.cache_dir.empty()) return std::nullopt;
        const auto path = cache_path(key);
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) return std::nullopt;
        try {
            return nlohmann::json::parse(read_file(path));
        } catch (...) {
            // A torn or corrupt entry is indistinguishable from a miss.
            return std::nullopt;
        }
    }

    void write_cache(const std::string& key, const nlohmann::json& value) {
        if (config_.cache_dir.empty()) return;
        const auto path = cache_path(key);
        const auto tmp = path.string() + ".tmp." + std::to_string(
            std::hash<std::thread::id>{}(std::this_thread::get_id()));
        write_file(tmp, value.dump(2) + "\n");
        std::filesystem::rename(tmp, path);
    }

    struct AtomicCounters {
        std::atomic<std::uint64_t> cache_hits{0};
        std::atomic<std::uint64_t> cache_misses{0};
        std::atomic<std::uint64_t> backend_calls{0};
        std::atomic<std::uint64_t> retries{0};
    };

    std::shared_ptr<ModelBackend> backend_;
    GatewayConfig config_;
    Semaphore slots_;
    AtomicCounters counters_;
    std::mt19937_64 rng_;
    std::mutex rng_mutex_;
    SleepFn sleep_;
};

}  // namespace microeval
