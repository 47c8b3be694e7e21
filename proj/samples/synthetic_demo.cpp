// Runs the latent-space search on a few synthetic questions and prints each iteration.

#include <iostream>
#include <memory>

#include <fmt/format.h>

#include "softreason/softreason.hpp"

int main() {
    using namespace softreason;

    SyntheticWorldConfig world_config;
    world_config.seed = 11;
    auto world = std::make_shared<SyntheticWorld>(world_config);
    const SyntheticBackend backend(world);

    OptimizerConfig config;
    for (const auto& q : world->make_questions(3)) {
        config.seed = derive_seed(2024, hash_bytes(q.id));
        const auto record = optimize({q.id, q.question, {}}, config, backend);
        std::cout << fmt::format("{}  gold {}\n", q.id, q.gold_answer);
        for (const auto& it : record.iterations) {
            std::cout << fmt::format("  iteration {}  f* {:.3f}  answers:", it.index, it.best_so_far);
            for (const auto& c : it.candidates) {
                std::cout << " " << (c.answer ? c.answer->canonical() : "-") << (c.verifier_bit ? "*" : "");
            }
            if (it.verifier.verdict) std::cout << "  verifier -> " << it.verifier.verdict->canonical();
            std::cout << "\n";
        }
        std::cout << fmt::format("  {} after {} iterations, final answer {} ({})\n\n", to_string(record.termination),
                                 record.iteration_count(),
                                 record.final_answer ? record.final_answer->canonical() : "none", record.final_source);
    }
    return 0;
}
