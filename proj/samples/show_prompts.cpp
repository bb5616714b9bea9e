// Builds one evaluation item by hand and prints the prompt each setting
// produces, so the injection rules are visible side by side.

#include <microeval/microeval.hpp>

#include <iostream>

using namespace microeval;

int main(int argc, char** argv) {
    const std::string manifest = argc > 1 ? argv[1] : "templates/manifest.json";
    const std::string language = argc > 2 ? argv[2] : "en";
    const PromptTemplateSet templates = load_template_set(manifest, language);

    EvalItem item;
    item.id = "demo-1";
    item.question = "Which component stores signals that leave component A?";
    item.checklists = {{"cl1", {{"c1", "The answer names component C."}}}};
    item.oracle_conclusions = {
        {"Signals from component A are stored by component C.", false},
        {"Name the storing component explicitly.", true},
    };
    // Loaded datasets carry the section title as the first line of the
    // fact text; hand-built items follow the same convention.
    item.oracle_facts = {
        {"demo-1.f1", "Signal routing\nComponent A forwards every signal to component B.",
         std::string("Signal routing"), true},
        {"demo-1.f2", "Component B relays signals to component C, which stores them.",
         std::nullopt, true},
    };

    for (const PromptSetting setting : kAllSettings) {
        std::cout << "════════ " << to_string(setting) << " ════════\n"
                  << build_answer_prompt(item, setting, templates) << "\n";
    }

    std::cout << "════════ judge prompt for c1 ════════\n"
              << build_judge_prompt("The signal ends at component C.",
                                    item.checklists[0].conditions[0], templates);
    return 0;
}
