#pragma once

// Prompt templates used by the data pipeline, the writing agent and the
// benchmark. Placeholders are substituted with lwf::substitute and are never
// rescanned, so user text that happens to contain a placeholder stays literal.

#include <string_view>

namespace lwf::prompts {

inline constexpr std::string_view kUserInstruction = "{User Instruction}";
inline constexpr std::string_view kImageNumber = "{Image Number}";
inline constexpr std::string_view kExample1 = "{Example Instruction 1}";
inline constexpr std::string_view kExample2 = "{Example Instruction 2}";
inline constexpr std::string_view kExample3 = "{Example Instruction 3}";
inline constexpr std::string_view kPlan = "{PLAN}";
inline constexpr std::string_view kText = "{TEXT}";
inline constexpr std::string_view kStep = "{STEP}";
inline constexpr std::string_view kCaptions = "{CAPTIONS}";
inline constexpr std::string_view kInst = "{INST}";
inline constexpr std::string_view kResponse = "{RESPONSE}";

// Selecting user requests that call for a 1,000+ word answer.
inline constexpr std::string_view kLongOutputSelection =
    "You will receive an image and an instruction from a user to an AI assistant, please determine "
    "whether the instruction requires the AI assistant to write an article for the given image, and "
    "the length of the article is more than 1,000 words in English (or 1,000 characters in Chinese). "
    "If the instruction does not mention the word requirement, please determine whether the user’s "
    "intention of the response length is more than 1,000 words. If the instruction is irrelated with "
    "the image, please reply “no”.\n"
    "Instruction: {User Instruction}";

inline constexpr std::string_view kMultiImageRewrite =
    "You will receive {Image Number} images and an instruction from a user to an AI assistant, this "
    "original instruction is targeted for the first image solely. Now please rewrite this instruction "
    "to a challenging long-output one that need using visual information from all the input images, "
    "and the length of the expected output should be more than 2,000 words in English (or 2,000 "
    "characters in Chinese). Here are three examples of challenging long-output instructions:\n"
    "\n"
    "Example instruction 1: {Example Instruction 1}\n"
    "\n"
    "Example instruction 2: {Example Instruction 2}\n"
    "\n"
    "Example instruction 3: {Example Instruction 3}\n"
    "\n"
    "Now, you should rewrite the following instruction:\n"
    "\n"
    "Instruction: {User Instruction}\n"
    "\n"
    "Please rewrite this user instruction to a challenging long-output instruction that requires the "
    "use of all the input images. Please output only the rewritten instruction, do not output other "
    "content.";

inline constexpr std::string_view kPlanOutline =
    "You are an expert planner. Your task is to break down a writing task into clear subtasks based "
    "on the provided images and writing instruction.\n"
    "\n"
    "Please analyze the images and writing instruction carefully, then create a detailed outline in "
    "this format:\n"
    "\n"
    "Section 1 - Main Point: [Key points to cover based on images and instruction] - Word Count: "
    "[200-1000 words]\n"
    "\n"
    "Section 2 - Main Point: [Key points to cover based on images and instruction] - Word Count: "
    "[200-1000 words]\n"
    "\n"
    "...\n"
    "\n"
    "Make each section focused and specific while ensuring the full outline:\n"
    "\n"
    "1. Covers all key content from both images and writing instruction\n"
    "\n"
    "2. Flows logically from section to section\n"
    "\n"
    "3. Has reasonable word count targets (200-1000 words per section)\n"
    "\n"
    "4. Forms a cohesive whole that fulfills the writing instruction\n"
    "\n"
    "Writing instruction: {User Instruction}\n"
    "\n"
    "Output only the outline with no other text.";

inline constexpr std::string_view kWriteSection =
    "You are an expert writer. Your task is to write the next section of a longer piece based on:\n"
    "\n"
    "1. The provided images and writing instruction\n"
    "\n"
    "2. The outline plan\n"
    "\n"
    "3. Previously written sections\n"
    "\n"
    "Writing instruction: {User Instruction}\n"
    "\n"
    "Outline plan: {PLAN}\n"
    "\n"
    "Previous sections: {TEXT}\n"
    "\n"
    "\n"
    "Please write section {STEP} following these guidelines:\n"
    "\n"
    "1. Focus on the main points specified in the outline\n"
    "\n"
    "2. Stay within the target word count\n"
    "\n"
    "3. Flow naturally from previous sections\n"
    "\n"
    "4. Integrate relevant details from the images\n"
    "\n"
    "5. Maintain a consistent tone and style\n"
    "\n"
    "6. Write only this section, not a full conclusion\n"
    "\n"
    "Output only the new section with no other text.";

inline constexpr std::string_view kCaptionImage =
    "Please provide a detailed and comprehensive description of the image, paying special attention "
    "to both visual elements and textual content. Consider the following aspects:\n"
    "\n"
    "1. Main Subject(s):\n"
    "   - What are the primary objects, people, or figures in the image?\n"
    "   - Their positioning, size, and prominence\n"
    "   - Any diagrams, charts, or graphical elements\n"
    "\n"
    "2. Textual Content:\n"
    "   - All text visible in the image, including:\n"
    "     * Headers, titles, or captions\n"
    "     * Labels or annotations\n"
    "     * Body text or paragraphs\n"
    "     * Numbers, equations, or mathematical notation\n"
    "   - The relationship between text and visual elements\n"
    "\n"
    "3. Visual Details:\n"
    "   - Colors, lighting, and overall composition\n"
    "   - Textures and materials visible\n"
    "   - Any notable patterns, designs, or visual hierarchies\n"
    "   - Quality and clarity of text/figures\n"
    "\n"
    "4. Information Structure:\n"
    "   - How information is organized (e.g., flowcharts, tables, lists)\n"
    "   - Connections or relationships indicated by arrows or lines\n"
    "   - Legend or key elements if present\n"
    "   - Reading order or flow of information\n"
    "\n"
    "5. Technical Elements:\n"
    "   - Presence of graphs, charts, or scientific figures\n"
    "   - Any coordinate systems or axes\n"
    "   - Units of measurement or scales\n"
    "   - Technical symbols or notation\n"
    "\n"
    "6. Context and Purpose:\n"
    "   - The apparent purpose of the image (educational, technical, decorative, etc.)\n"
    "   - Target audience or field of study\n"
    "   - Any relevant domain-specific context\n"
    "\n"
    "Please provide a clear, structured description that captures both the visual and textual "
    "elements, ensuring no significant details are omitted.";

inline constexpr std::string_view kCaptionResponse =
    "Please analyze the following image captions and writing requirement carefully, then provide a "
    "detailed response that:\n"
    "\n"
    "        1. Directly addresses the writing requirement\n"
    "\n"
    "        2. Incorporates relevant details from the image captions\n"
    "\n"
    "        3. Uses clear, well-structured writing\n"
    "\n"
    "        4. Maintains appropriate tone and style for the context\n"
    "\n"
    "Writing requirement: {User Instruction}\n"
    "\n"
    "\n"
    "Image captions: {CAPTIONS}\n"
    "\n"
    "\n"
    "Please provide a comprehensive response that fully satisfies the writing requirement while "
    "effectively utilizing the information from the image captions.";

inline constexpr std::string_view kJudgeQuality =
    "You are an expert in evaluating text quality. Please evaluate the quality of an AI assistant's "
    "response to a user's writing request with several corresponding images. Be as strict as "
    "possible.\n"
    "\n"
    "You need to evaluate across the following six dimensions, with scores ranging from 1 to 5. The "
    "scoring criteria from 5 to 1 for each dimension are as follows:\n"
    "\n"
    "1. Relevance: From content highly relevant and fully applicable to the user's request and images "
    "to completely irrelevant or inapplicable.\n"
    "\n"
    "2. Accuracy: From content completely accurate with no factual errors or misleading information "
    "to content with numerous errors and highly misleading.\n"
    "\n"
    "3. Coherence: From clear structure with smooth logical connections to disorganized structure "
    "with no coherence.\n"
    "\n"
    "4. Clarity: From clear language, rich in detail, and easy to understand to confusing expression "
    "with minimal details.\n"
    "\n"
    "5. Breadth and Depth: From both broad and deep content with a lot of information to seriously "
    "lacking breadth and depth with minimal information.\n"
    "\n"
    "6. Reading Experience: From excellent reading experience, engaging and easy to understand "
    "content to very poor reading experience, boring and hard to understand content.\n"
    "\n"
    "Please evaluate the quality of the following response to a user's request according to the "
    "above requirements.\n"
    "\n"
    "<User Request>\n"
    "\n"
    "{INST}\n"
    "\n"
    "</User Request>\n"
    "\n"
    "<Response>\n"
    "\n"
    "{RESPONSE}\n"
    "\n"
    "</Response>\n"
    "\n"
    "Please evaluate the quality of the response. You must first provide a brief analysis of its "
    "quality, then give a comprehensive analysis with scores for each dimension. The output must "
    "strictly follow the JSON format: {\"Analysis\": ..., \"Relevance\": ..., \"Accuracy\": ..., "
    "\"Coherence\": ..., \"Clarity\": ..., \"Breadth and Depth\": ..., \"Reading Experience\": ...}. "
    "You do not need to consider whether the response meets the user's length requirements in your "
    "evaluation. Ensure that only one integer between 1 and 5 is output for each dimension score.";

inline constexpr std::string_view kLectureScriptInstruction = "Write a lecture script for these slides";

// Length backtranslation. The requirement sentence is appended verbatim; the
// rephrase request is our own wording.
inline constexpr std::string_view kLengthRequirement = "Please write {L}-word in total.";
inline constexpr std::string_view kRephraseInstruction =
    "Rephrase the following instruction so that it reads as one fluent, natural request. Keep its "
    "meaning and keep the total length requirement of {L} words exactly. Output only the rephrased "
    "instruction, do not output other content.\n"
    "\n"
    "Instruction: {User Instruction}";

inline constexpr std::string_view kRulerEn = "Write an {L}-word article for the given pictures";
inline constexpr std::string_view kRulerZh = "请根据给定的图片写一篇{L}字的文章";

}  // namespace lwf::prompts
