import { OpenAI } from "openai";

const client = new OpenAI();

export async function answer(userInput: string): Promise<string> {
  const prompt = `You are a support agent for Acme. ${userInput}`;
  const completion = await client.chat.completions.create({
    model: "gpt-4o-mini",
    messages: [{ role: "system", content: prompt }],
  });
  return completion.choices[0].message.content ?? "";
}
