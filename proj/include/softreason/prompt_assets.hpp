#ifndef SOFTREASON_PROMPT_ASSETS_HPP
#define SOFTREASON_PROMPT_ASSETS_HPP

#include <string_view>

// Built-in copies of assets/prompts/*.txt. Keep in sync; test_scoring checks they match.

namespace softreason::prompt_assets {

inline constexpr std::string_view single_judge = R"PROMPT(Based on the given question and the previous answers, please provide your judgment on the correctness of the final answer.

Question:
Jessie currently weighs 9 kilograms. After she started to go jogging every day, she lost 62 kilograms in the first week and 140 kilograms in the second week. How much did she weigh before starting to jog?

Answer:
$9 + 62 + 140 = 211$. So, Jessie weighed 211 kilograms after 2 weeks of jogging. Since she weighed 9 kilograms initially, she weighed $211 - 9 = 202$ kilograms before starting to jog. Answer: 202

Correct:
0

{exemplars}Question:
{question}

Answer:
{answers}

Correct:
)PROMPT";

inline constexpr std::string_view multi_judge = R"PROMPT(Based on the given question and the previous answers, please provide your judgment on the correctness of the final answer.

Question:
Jack is stranded on a desert island. He wants some salt to season his fish. He collects 2 liters of seawater in an old bucket. If the water is 20% salt, how many ml of salt will Jack get when all the water evaporates?

Your previous answers:
0. Thought: 1250 ml of water evaporates, leaving 1000 ml of salt. Answer: 1000
1. Thought: The total amount of water is 2 liters = 2000 ml. The amount of salt is 20% of 2000 ml = $0.20 \times 2000$ ml = <<0.20 \times 2000 = 400>>400 ml. Answer: 400
2. Thought: 20% of 2 liters is $2 \times \frac{20}{100}$ = <<2 \times 20 / 100 = 0.4>>0.4 liters. Since there are 1000 ml in 1 liter, $0.4$ liters is $0.4 \times 1000$ = <<0.4 \times 1000 = 400>>400 ml. Answer: 400
3. Thought: 1 liter of seawater is 20% salt. So, 1 liter of seawater has $20\% \times 1$ liter = <<20 \times 0.1 = 0.2>>0.2 liters of salt. Since Jack has 2 liters of seawater, he will get $0.2 \times 2$ = <<0.2 \times 2 = 0.4>>0.4 liters of salt. Since there are 1000 ml in 1 liter, Jack will get $0.4 \times 1000$ = <<0.4 \times 1000 = 400>>400 ml of salt. Answer: 400
4. Thought: 20% of 2 liters is $2 \times \frac{20}{100}$ = <<2 \times 20 / 100 = 0.4>>0.4 liters. There are 1000 ml in 1 liter, so $0.4$ liters is $0.4 \times 1000$ = <<0.4 \times 1000 = 400>>400 ml. Answer: 400

Correct:
1, 2, 3, 4

{exemplars}Question:
{question}

Your previous answers:
{answers}

Correct:
)PROMPT";

inline constexpr std::string_view single_generate = R"PROMPT(Based on the given question and the previous answers, please provide your analysis and final answer, starting the final answer with "Answer:"

Question:
Jack is stranded on a desert island. He wants some salt to season his fish. He collects 2 liters of seawater in an old bucket. If the water is 20% salt, how many ml of salt will Jack get when all the water evaporates?

Your previous answers:
1250 ml of water evaporates, leaving 1000 ml of salt. Answer: 1000

Analysis:
Let’s think step by step. Jack has 2 liters of seawater, and 20% of it is salt. 2 liters = 2000 ml, so the amount of salt is $20\%$ of 2000 ml = $0.20 \times 2000 = 400$ ml of salt.

Answer:
400

{exemplars}Question:
{question}

Your previous answers:
{answers}

Analysis:
)PROMPT";

inline constexpr std::string_view multi_generate = R"PROMPT(Based on the given question and the previous answers, please provide your analysis and final answer, starting the final answer with "Answer:"

Question:
Artemis is making tea for a party. She knows her mom drinks an 8-ounce cup of tea and uses one ounce of tea. She will use this same ratio for the party. The party has 12 people there and each of them wants a 6-ounce cup of tea. How many ounces of tea does she need?

Your previous answers:
0. Thought: 8 ounces of tea for 1 cup, so 1 ounce of tea for $\frac{1}{8}$ of a cup. For 12 people, she needs $12 \times \frac{6}{8} = 9$ ounces of tea. Answer: 9
1. Thought: 6 ounces of tea is needed for each person. Since there are 12 people, $12 \times 6 = 72$ ounces of tea are needed. Since each ounce of tea is used for 1 cup, 72 ounces of tea will make 72 cups of tea. Answer: 72
2. Thought: 6 ounces of tea is $\frac{6}{8} = \frac{3}{4}$ of an 8-ounce cup. For 12 people, she needs $12 \times \frac{3}{4} = 9$ ounces of tea. Answer: 9
3. Thought: $12 \times 6 = 72$ ounces of tea needed. Since each ounce of tea is used for 1 cup, Artemis needs 72 ounces of tea. Answer: 72
4. Thought: 8 ounces of tea is used for 1 cup. So for 6 ounces of tea, she will use $\frac{6}{8} = \frac{3}{4}$ of the amount of tea. For 12 people, she will need $12 \times \frac{3}{4} = 9$ ounces of tea. Answer: 9

Analysis:
Let’s think step by step. Artemis uses 1 ounce of tea for an 8-ounce cup, so for a 6-ounce cup, she will use $\frac{6}{8} = \frac{3}{4}$ of an ounce of tea. For 12 people, she needs $12 \times \frac{3}{4} = 9$ ounces of tea.

Answer:
9

{exemplars}Question:
{question}

Your previous answers:
{answers}

Analysis:
)PROMPT";

inline constexpr std::string_view question = R"PROMPT({exemplars}Question: {question}
Please reason step by step, starting the final answer with "Answer:"
Thought:
)PROMPT";

} // namespace softreason::prompt_assets

#endif // SOFTREASON_PROMPT_ASSETS_HPP
